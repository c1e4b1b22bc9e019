#include "semfeat/ingest.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <unordered_set>

#include "json.hpp"
#include "semfeat/common.hpp"

namespace semfeat {

using nlohmann::json;

std::string_view to_string(Split split) {
    switch (split) {
        case Split::Train: return "train";
        case Split::Test: return "test";
        case Split::Unassigned: return "unassigned";
    }
    return "unassigned";
}

Split parse_split(std::string_view text) {
    if (text == "train") return Split::Train;
    if (text == "test") return Split::Test;
    if (text == "unassigned") return Split::Unassigned;
    throw Error("unknown split '" + std::string(text) + "'");
}

int Corpus::category_index(std::string_view category) const {
    auto it = std::find(categories.begin(), categories.end(), category);
    return it == categories.end() ? -1 : static_cast<int>(it - categories.begin());
}

std::string normalize_label(std::string_view label) {
    auto is_space = [](char c) { return std::isspace(static_cast<unsigned char>(c)) != 0; };
    std::size_t begin = 0, end = label.size();
    while (begin < end && is_space(label[begin])) ++begin;
    while (end > begin && is_space(label[end - 1])) --end;
    std::string out;
    out.reserve(end - begin);
    for (std::size_t i = begin; i < end; ++i) {
        char c = label[i];
        out.push_back(is_space(c) ? '_' : static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
    }
    return out;
}

bool is_valid_slice_count(int n_slices) {
    return n_slices == 9 || n_slices == 16 || n_slices == 25;
}

void sort_tags(std::vector<TagRecord>& tags) {
    std::sort(tags.begin(), tags.end(), [](const TagRecord& a, const TagRecord& b) {
        if (a.score != b.score) return a.score > b.score;
        return a.label < b.label;
    });
}

namespace {

[[noreturn]] void fail_line(std::size_t line, const std::string& what) {
    throw Error("ingest", "line " + std::to_string(line) + ": " + what);
}

const json& require_field(const json& obj, const char* key, std::size_t line) {
    auto it = obj.find(key);
    if (it == obj.end()) fail_line(line, std::string("missing field '") + key + "'");
    return *it;
}

std::string require_string(const json& obj, const char* key, std::size_t line) {
    const json& value = require_field(obj, key, line);
    if (!value.is_string()) fail_line(line, std::string("field '") + key + "' must be a string");
    auto text = value.get<std::string>();
    if (text.empty()) fail_line(line, std::string("field '") + key + "' must be non-empty");
    return text;
}

ImageRecord parse_image(const json& obj, std::size_t line, int k_tags) {
    if (!obj.is_object()) fail_line(line, "record must be a JSON object");
    ImageRecord image;
    image.image_id = require_string(obj, "image_id", line);
    image.category = require_string(obj, "category", line);
    if (auto it = obj.find("split"); it != obj.end()) {
        if (!it->is_string()) fail_line(line, "field 'split' must be a string");
        try {
            image.split = parse_split(it->get<std::string>());
        } catch (const Error& e) {
            fail_line(line, e.what());
        }
    }

    const json& subs = require_field(obj, "sub_images", line);
    if (!subs.is_array()) fail_line(line, "field 'sub_images' must be an array");
    const int n_slices = static_cast<int>(subs.size());
    if (!is_valid_slice_count(n_slices))
        fail_line(line, "image has " + std::to_string(n_slices) +
                            " sub-images, expected one of 9, 16, 25");

    std::vector<bool> seen(static_cast<std::size_t>(n_slices), false);
    image.sub_images.reserve(subs.size());
    for (const json& sub : subs) {
        if (!sub.is_object()) fail_line(line, "sub-image entry must be a JSON object");
        const json& index_json = require_field(sub, "index", line);
        if (!index_json.is_number_integer()) fail_line(line, "sub-image index must be an integer");
        const auto index = index_json.get<long long>();
        if (index < 0 || index >= n_slices)
            fail_line(line, "sub-image index " + std::to_string(index) + " out of range");
        if (seen[static_cast<std::size_t>(index)])
            fail_line(line, "duplicate sub-image index " + std::to_string(index));
        seen[static_cast<std::size_t>(index)] = true;

        SubImageTags entry;
        entry.index = static_cast<int>(index);
        const std::string where = "sub-image " + std::to_string(index);
        const json& tags = require_field(sub, "tags", line);
        if (!tags.is_array()) fail_line(line, where + ": 'tags' must be an array");
        if (static_cast<int>(tags.size()) != k_tags)
            fail_line(line, where + " has " + std::to_string(tags.size()) + " tags, expected " +
                                std::to_string(k_tags));
        for (const json& tag : tags) {
            if (!tag.is_object()) fail_line(line, where + ": tag must be a JSON object");
            const json& label_json = require_field(tag, "label", line);
            const json& score_json = require_field(tag, "score", line);
            if (!label_json.is_string()) fail_line(line, where + ": tag label must be a string");
            if (!score_json.is_number()) fail_line(line, where + ": tag score must be a number");
            TagRecord record{normalize_label(label_json.get<std::string>()), score_json.get<double>()};
            if (record.label.empty()) fail_line(line, where + ": empty tag label");
            if (!(record.score >= 0.0 && record.score <= 1.0))
                fail_line(line, where + ": score " + format_double(record.score) +
                                    " outside [0,1]");
            entry.tags.push_back(std::move(record));
        }
        sort_tags(entry.tags);
        image.sub_images.push_back(std::move(entry));
    }
    std::sort(image.sub_images.begin(), image.sub_images.end(),
              [](const SubImageTags& a, const SubImageTags& b) { return a.index < b.index; });
    return image;
}

}  // namespace

Corpus parse_corpus(std::istream& in, const ParseOptions& options) {
    if (options.k_tags < 1) throw Error("ingest", "k_tags must be >= 1");
    if (options.n_slices && !is_valid_slice_count(*options.n_slices))
        throw Error("ingest", "slices must be one of 9, 16, 25");

    Corpus corpus;
    corpus.k_tags = options.k_tags;
    std::unordered_set<std::string> ids;
    std::string text;
    std::size_t line = 0;
    while (std::getline(in, text)) {
        ++line;
        if (std::all_of(text.begin(), text.end(),
                        [](unsigned char c) { return std::isspace(c) != 0; }))
            continue;
        json obj;
        try {
            obj = json::parse(text);
        } catch (const json::parse_error& e) {
            fail_line(line, std::string("malformed JSON: ") + e.what());
        }
        ImageRecord image = parse_image(obj, line, options.k_tags);
        const int n = static_cast<int>(image.sub_images.size());
        const int expected = options.n_slices ? *options.n_slices : corpus.n_slices;
        if (expected != 0 && n != expected)
            fail_line(line, "image has " + std::to_string(n) + " sub-images but the corpus uses " +
                                std::to_string(expected));
        corpus.n_slices = n;
        if (!ids.insert(image.image_id).second)
            fail_line(line, "duplicate image_id '" + image.image_id + "'");
        if (corpus.category_index(image.category) < 0) corpus.categories.push_back(image.category);
        corpus.images.push_back(std::move(image));
    }
    return corpus;
}

Corpus load_corpus(const std::string& path, const ParseOptions& options) {
    std::ifstream in(path);
    if (!in) throw Error("ingest", "cannot open corpus '" + path + "'");
    return parse_corpus(in, options);
}

void write_corpus(std::ostream& out, const Corpus& corpus) {
    for (const auto& image : corpus.images) {
        // ordered_json keeps the schema's key order in the output.
        nlohmann::ordered_json obj;
        obj["image_id"] = image.image_id;
        obj["category"] = image.category;
        obj["split"] = std::string(to_string(image.split));
        auto subs = nlohmann::ordered_json::array();
        for (const auto& sub : image.sub_images) {
            nlohmann::ordered_json entry;
            entry["index"] = sub.index;
            auto tags = nlohmann::ordered_json::array();
            for (const auto& tag : sub.tags) {
                nlohmann::ordered_json t;
                t["label"] = tag.label;
                t["score"] = tag.score;
                tags.push_back(std::move(t));
            }
            entry["tags"] = std::move(tags);
            subs.push_back(std::move(entry));
        }
        obj["sub_images"] = std::move(subs);
        out << obj.dump() << '\n';
    }
}

void save_corpus(const std::string& path, const Corpus& corpus) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("ingest", "cannot write corpus '" + path + "'");
    write_corpus(out, corpus);
    if (!out) throw Error("ingest", "write failed for '" + path + "'");
}

SyntheticSpec make_disjoint_spec(int categories, int images_per_category, int signature_size,
                                 int noise_size, double signature_probability, int n_slices,
                                 int k_tags) {
    auto pad = [](int value) {
        std::string s = std::to_string(value);
        return std::string(s.size() < 2 ? 2 - s.size() : 0, '0') + s;
    };
    SyntheticSpec spec;
    spec.images_per_category = images_per_category;
    spec.n_slices = n_slices;
    spec.k_tags = k_tags;
    spec.signature_probability = signature_probability;
    for (int c = 0; c < categories; ++c) {
        CategorySignature sig{"category_" + pad(c), {}};
        for (int l = 0; l < signature_size; ++l)
            sig.labels.push_back("c" + pad(c) + "_object_" + pad(l));
        spec.signatures.push_back(std::move(sig));
    }
    for (int l = 0; l < noise_size; ++l) spec.noise_pool.push_back("noise_" + pad(l));
    return spec;
}

Corpus generate_synthetic(const SyntheticSpec& spec, std::uint64_t seed) {
    const double q = spec.signature_probability;
    if (!(q > 0.0 && q <= 1.0)) throw Error("synthetic", "signature probability must lie in (0,1]");
    if (spec.signatures.size() < 2) throw Error("synthetic", "need at least 2 categories");
    if (spec.images_per_category < 2) throw Error("synthetic", "need at least 2 images per category");
    if (!is_valid_slice_count(spec.n_slices)) throw Error("synthetic", "slices must be one of 9, 16, 25");
    if (spec.k_tags < 1) throw Error("synthetic", "k_tags must be >= 1");

    std::vector<CategorySignature> signatures = spec.signatures;
    for (auto& sig : signatures) {
        for (auto& label : sig.labels) label = normalize_label(label);
        std::sort(sig.labels.begin(), sig.labels.end());
        sig.labels.erase(std::unique(sig.labels.begin(), sig.labels.end()), sig.labels.end());
        if (sig.labels.size() < 3)
            throw Error("synthetic", "signature of '" + sig.category + "' has fewer than 3 labels");
    }
    std::vector<std::string> noise;
    for (const auto& label : spec.noise_pool) noise.push_back(normalize_label(label));
    std::sort(noise.begin(), noise.end());
    noise.erase(std::unique(noise.begin(), noise.end()), noise.end());

    Rng rng(seed);
    Corpus corpus;
    corpus.n_slices = spec.n_slices;
    corpus.k_tags = spec.k_tags;
    for (const auto& sig : signatures) {
        if (corpus.category_index(sig.category) >= 0)
            throw Error("synthetic", "duplicate category '" + sig.category + "'");
        corpus.categories.push_back(sig.category);
        if (sig.labels.size() + noise.size() < static_cast<std::size_t>(spec.k_tags))
            throw Error("synthetic", "signature plus noise pool smaller than k_tags");

        for (int img = 0; img < spec.images_per_category; ++img) {
            ImageRecord image;
            std::string number = std::to_string(img);
            image.image_id = sig.category + "_" + std::string(number.size() < 4 ? 4 - number.size() : 0, '0') + number;
            image.category = sig.category;
            for (int s = 0; s < spec.n_slices; ++s) {
                SubImageTags sub;
                sub.index = s;
                // Remaining (unused in this sub-image) labels of each source.
                std::vector<std::string> sig_left = sig.labels;
                std::vector<std::string> noise_left = noise;
                auto take = [&rng](std::vector<std::string>& pool) {
                    auto pick = static_cast<std::size_t>(rng.below(pool.size()));
                    std::string label = std::move(pool[pick]);
                    pool.erase(pool.begin() + static_cast<std::ptrdiff_t>(pick));
                    return label;
                };
                for (int t = 0; t < spec.k_tags; ++t) {
                    const bool want_signature = rng.unit() < q;
                    const bool from_signature =
                        (want_signature && !sig_left.empty()) || noise_left.empty();
                    if (from_signature) {
                        sub.tags.push_back({take(sig_left), rng.open_closed(0.5, 1.0)});
                    } else {
                        sub.tags.push_back({take(noise_left), rng.open_closed(0.0, 0.5)});
                    }
                }
                sort_tags(sub.tags);
                image.sub_images.push_back(std::move(sub));
            }
            corpus.images.push_back(std::move(image));
        }
    }
    return corpus;
}

Corpus split_corpus(const Corpus& corpus, double train_fraction, std::uint64_t seed) {
    if (!(train_fraction > 0.0 && train_fraction < 1.0))
        throw Error("split", "train fraction must lie in (0,1)");
    Corpus out = corpus;
    Rng rng(seed);
    for (const auto& category : corpus.categories) {
        std::vector<std::size_t> members;
        for (std::size_t i = 0; i < corpus.images.size(); ++i)
            if (corpus.images[i].category == category) members.push_back(i);
        if (members.size() < 2)
            throw Error("split", "category '" + category + "' has fewer than 2 images");
        const auto size = static_cast<long long>(members.size());
        long long n_train = std::llround(train_fraction * static_cast<double>(size));
        n_train = std::clamp(n_train, 1LL, size - 1);
        rng.shuffle(members.begin(), members.end());
        for (long long k = 0; k < size; ++k)
            out.images[members[static_cast<std::size_t>(k)]].split =
                k < n_train ? Split::Train : Split::Test;
    }
    return out;
}

}  // namespace semfeat
