#include "semfeat/dictionary.hpp"

#include <algorithm>
#include <atomic>
#include <cctype>
#include <exception>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <mutex>
#include <sstream>
#include <thread>

#include "json.hpp"
#include "semfeat/common.hpp"

namespace semfeat {

LabelPair LabelPair::of(std::string_view a, std::string_view b) {
    if (b < a) std::swap(a, b);
    return LabelPair{std::string(a), std::string(b)};
}

std::string token_digest(const std::vector<std::string>& tokens) {
    std::string joined;
    for (const auto& t : tokens) {
        joined += t;
        joined += '\n';
    }
    return "fnv1a64:" + fnv1a_hex(joined);
}

RawDictionary build_raw_dictionary(const Corpus& corpus, std::string_view category, int max_images) {
    if (max_images < 1) throw Error("dictionary", "max_images must be >= 1");
    if (corpus.category_index(category) < 0)
        throw Error("dictionary", "unknown category '" + std::string(category) + "'");

    RawDictionary raw;
    raw.category = std::string(category);
    raw.segment_length = corpus.k_tags;
    int used = 0;
    for (const auto& image : corpus.images) {
        if (used == max_images) break;
        if (image.category != category || image.split != Split::Train) continue;
        ++used;
        // sub_images are kept index-sorted and tags rank-sorted by the parser.
        for (const auto& sub : image.sub_images)
            for (const auto& tag : sub.tags) raw.tokens.push_back(tag.label);
    }
    if (used == 0)
        throw Error("dictionary",
                    "no training images for category '" + std::string(category) + "'");
    for (const auto& token : raw.tokens) ++raw.counts[token];
    raw.total = static_cast<long long>(raw.tokens.size());
    raw.token_digest = token_digest(raw.tokens);
    return raw;
}

namespace {

std::vector<RankedPair> rank_pairs(const std::map<LabelPair, long long>& pairs) {
    std::vector<RankedPair> ranked;
    ranked.reserve(pairs.size());
    for (const auto& [pair, freq] : pairs) ranked.push_back({pair, freq});
    // The map already iterates in pair order, so a stable sort on frequency
    // gives the pair-ascending tie-break.
    std::stable_sort(ranked.begin(), ranked.end(), [](const RankedPair& a, const RankedPair& b) {
        return a.frequency > b.frequency;
    });
    return ranked;
}

}  // namespace

PatternDictionary build_pattern_dictionary(const RawDictionary& raw, const PatternOptions& options) {
    PatternDictionary pattern;
    pattern.category = raw.category;
    const auto& tokens = raw.tokens;
    if (tokens.size() < 2) {
        std::clog << "warning: dictionary for '" << raw.category
                  << "' has fewer than 2 tokens; pattern dictionary is empty\n";
        return pattern;
    }
    const long long step = options.count_both_directions ? 2 : 1;
    const std::size_t segment = options.within_subimage && raw.segment_length > 0
                                    ? static_cast<std::size_t>(raw.segment_length)
                                    : 0;
    for (std::size_t t = 0; t + 1 < tokens.size(); ++t) {
        if (segment != 0 && (t + 1) % segment == 0) continue;
        if (tokens[t] == tokens[t + 1]) continue;
        pattern.pairs[LabelPair::of(tokens[t], tokens[t + 1])] += step;
    }
    pattern.ranked = rank_pairs(pattern.pairs);
    return pattern;
}

long long frequency(const RawDictionary& raw, std::string_view label) {
    auto it = raw.counts.find(std::string(label));
    return it == raw.counts.end() ? 0 : it->second;
}

double probability(const RawDictionary& raw, std::string_view label) {
    if (raw.total <= 0) return 0.0;
    return static_cast<double>(frequency(raw, label)) / static_cast<double>(raw.total);
}

std::vector<CategoryDictionary> build_dictionaries(const Corpus& corpus, int max_images,
                                                   const PatternOptions& options, int workers) {
    std::vector<CategoryDictionary> dicts(corpus.categories.size());
    auto build_one = [&](std::size_t i) {
        dicts[i].raw = build_raw_dictionary(corpus, corpus.categories[i], max_images);
        dicts[i].pattern = build_pattern_dictionary(dicts[i].raw, options);
    };
    const std::size_t n_workers =
        std::min<std::size_t>(static_cast<std::size_t>(std::max(workers, 1)), dicts.size());
    if (n_workers <= 1) {
        for (std::size_t i = 0; i < dicts.size(); ++i) build_one(i);
        return dicts;
    }

    std::atomic<std::size_t> next{0};
    std::exception_ptr first_error;
    std::mutex error_mutex;
    {
        std::vector<std::jthread> pool;
        for (std::size_t w = 0; w < n_workers; ++w) {
            pool.emplace_back([&] {
                for (std::size_t i = next++; i < dicts.size(); i = next++) {
                    try {
                        build_one(i);
                    } catch (...) {
                        std::lock_guard lock(error_mutex);
                        if (!first_error) first_error = std::current_exception();
                    }
                }
            });
        }
    }
    if (first_error) std::rethrow_exception(first_error);
    return dicts;
}

std::string dictionary_to_json(const CategoryDictionary& dict) {
    nlohmann::ordered_json obj;
    obj["category"] = dict.raw.category;
    obj["total"] = dict.raw.total;
    obj["segment_length"] = dict.raw.segment_length;
    obj["tokens_digest"] = dict.raw.token_digest;
    nlohmann::ordered_json counts = nlohmann::ordered_json::object();
    for (const auto& [label, count] : dict.raw.counts) counts[label] = count;
    obj["counts"] = std::move(counts);
    auto ranked = nlohmann::ordered_json::array();
    for (const auto& entry : dict.pattern.ranked)
        ranked.push_back({entry.pair.first, entry.pair.second, entry.frequency});
    obj["ranked"] = std::move(ranked);
    return obj.dump(1) + "\n";
}

CategoryDictionary dictionary_from_json(std::string_view text) {
    CategoryDictionary dict;
    try {
        auto obj = nlohmann::json::parse(text);
        dict.raw.category = obj.at("category").get<std::string>();
        dict.raw.total = obj.at("total").get<long long>();
        dict.raw.segment_length = obj.value("segment_length", 0);
        dict.raw.token_digest = obj.at("tokens_digest").get<std::string>();
        long long sum = 0;
        for (const auto& [label, count] : obj.at("counts").items()) {
            dict.raw.counts[label] = count.get<long long>();
            sum += count.get<long long>();
        }
        if (sum != dict.raw.total)
            throw Error("dictionary", "counts of '" + dict.raw.category + "' do not sum to total");
        dict.pattern.category = dict.raw.category;
        for (const auto& entry : obj.at("ranked")) {
            auto pair = LabelPair::of(entry.at(0).get<std::string>(), entry.at(1).get<std::string>());
            const auto freq = entry.at(2).get<long long>();
            if (freq < 1) throw Error("dictionary", "pair frequency must be >= 1");
            dict.pattern.pairs[pair] = freq;
        }
        dict.pattern.ranked = rank_pairs(dict.pattern.pairs);
    } catch (const nlohmann::json::exception& e) {
        throw Error("dictionary", std::string("malformed dictionary file: ") + e.what());
    }
    return dict;
}

std::string dictionary_file_name(std::string_view category) {
    std::string name;
    for (char c : category) {
        const bool keep = std::isalnum(static_cast<unsigned char>(c)) || c == '-' || c == '_' || c == '.';
        name.push_back(keep ? c : '_');
    }
    if (name.empty() || name[0] == '.') name.insert(name.begin(), '_');
    return name + ".json";
}

void save_dictionaries(const std::string& directory, const std::vector<CategoryDictionary>& dicts) {
    std::filesystem::create_directories(directory);
    for (const auto& dict : dicts) {
        auto path = std::filesystem::path(directory) / dictionary_file_name(dict.raw.category);
        std::ofstream out(path, std::ios::binary);
        if (!out) throw Error("dictionary", "cannot write '" + path.string() + "'");
        out << dictionary_to_json(dict);
    }
}

std::vector<CategoryDictionary> load_dictionaries(const std::string& directory,
                                                  const std::vector<std::string>& categories) {
    std::vector<CategoryDictionary> dicts;
    for (const auto& category : categories) {
        auto path = std::filesystem::path(directory) / dictionary_file_name(category);
        std::ifstream in(path, std::ios::binary);
        if (!in) throw Error("dictionary", "missing dictionary for category '" + category + "'");
        std::stringstream buffer;
        buffer << in.rdbuf();
        auto dict = dictionary_from_json(buffer.str());
        if (dict.raw.category != category)
            throw Error("dictionary", "'" + path.string() + "' holds category '" +
                                          dict.raw.category + "'");
        dicts.push_back(std::move(dict));
    }
    return dicts;
}

}  // namespace semfeat
