#include <algorithm>
#include <map>
#include <set>
#include <sstream>

#include "doctest.h"
#include "fixtures.hpp"
#include "semfeat/common.hpp"
#include "semfeat/ingest.hpp"

using namespace semfeat;

namespace {

std::string serialize(const Corpus& c) {
    std::ostringstream out;
    write_corpus(out, c);
    return out.str();
}

Corpus parse(const std::string& text, ParseOptions options = {}) {
    std::istringstream in(text);
    return parse_corpus(in, options);
}

std::string error_of(const std::string& text) {
    try {
        parse(text);
    } catch (const Error& e) {
        return e.what();
    }
    return {};
}

}  // namespace

TEST_CASE("empty stream yields an empty corpus") {
    auto c = parse("");
    CHECK(c.images.empty());
    CHECK(c.categories.empty());
    CHECK(parse("\n  \n").images.empty());
}

TEST_CASE("single image echoes the schema") {
    auto c = parse(fixtures::record_line("img1", "kitchen", 9, 10) + "\n");
    REQUIRE(c.images.size() == 1);
    CHECK(c.n_slices == 9);
    CHECK(c.k_tags == 10);
    CHECK(c.categories == std::vector<std::string>{"kitchen"});
    CHECK(c.images[0].sub_images.size() == 9);
    CHECK(c.images[0].sub_images[3].tags[0].label == "obj_0");
    CHECK(c.images[0].split == Split::Unassigned);
}

TEST_CASE("short tag list names line and sub-image") {
    std::string text = fixtures::record_line("a", "x", 9, 10) + "\n" +
                       fixtures::record_line("b", "x", 9, 10, /*short_subimage=*/4) + "\n";
    auto msg = error_of(text);
    CHECK(msg.find("line 2") != std::string::npos);
    CHECK(msg.find("sub-image 4") != std::string::npos);
    CHECK(msg.find("9 tags") != std::string::npos);
}

TEST_CASE("parse errors") {
    CHECK(error_of("{not json\n").find("line 1: malformed JSON") != std::string::npos);

    auto bad_score = fixtures::record_line("a", "x", 9, 10);
    bad_score.replace(bad_score.find("0.900000"), 8, "1.500000");
    CHECK(error_of(bad_score).find("outside [0,1]") != std::string::npos);

    auto mixed = fixtures::record_line("a", "x", 9, 10) + "\n" + fixtures::record_line("b", "x", 16, 10);
    CHECK(error_of(mixed).find("line 2") != std::string::npos);

    CHECK(error_of(fixtures::record_line("a", "x", 10, 10)).find("expected one of 9, 16, 25") !=
          std::string::npos);

    auto dup = fixtures::record_line("a", "x", 9, 10) + "\n" + fixtures::record_line("a", "y", 9, 10);
    CHECK(error_of(dup).find("duplicate image_id") != std::string::npos);

    std::istringstream in(fixtures::record_line("a", "x", 9, 10));
    ParseOptions sixteen;
    sixteen.n_slices = 16;
    CHECK_THROWS_AS(parse_corpus(in, sixteen), Error);
}

TEST_CASE("labels are case- and space-normalized") {
    CHECK(normalize_label("Book Jacket") == "book_jacket");
    CHECK(normalize_label("  book_jacket ") == "book_jacket");
    CHECK(normalize_label("Studio\tCouch") == "studio_couch");
}

TEST_CASE("tags sort by score then label") {
    std::vector<TagRecord> tags{{"b", 0.5}, {"a", 0.5}, {"c", 0.9}};
    sort_tags(tags);
    CHECK(tags[0].label == "c");
    CHECK(tags[1].label == "a");
    CHECK(tags[2].label == "b");
}

TEST_CASE("category order follows first appearance") {
    auto text = fixtures::record_line("1", "office", 9, 3) + "\n" + fixtures::record_line("2", "bath", 9, 3) +
                "\n" + fixtures::record_line("3", "office", 9, 3) + "\n";
    ParseOptions three;
    three.k_tags = 3;
    auto c = parse(text, three);
    CHECK(c.categories == std::vector<std::string>{"office", "bath"});
}

TEST_CASE("round trip over generated corpora") {
    for (std::uint64_t seed = 0; seed < 8; ++seed) {
        auto spec = make_disjoint_spec(3, 3, 5, 6, 0.7, seed % 2 ? 16 : 9, 4);
        auto c = split_corpus(generate_synthetic(spec, seed), 0.5, seed);
        ParseOptions options;
        options.k_tags = 4;
        CHECK(parse(serialize(c), options) == c);
    }
}

TEST_CASE("generate_synthetic is deterministic per seed") {
    auto spec = make_disjoint_spec(3, 4, 12, 20, 0.8);
    CHECK(serialize(generate_synthetic(spec, 7)) == serialize(generate_synthetic(spec, 7)));
    CHECK(serialize(generate_synthetic(spec, 7)) != serialize(generate_synthetic(spec, 8)));
}

TEST_CASE("q = 1 with disjoint signatures only draws signature labels") {
    auto spec = make_disjoint_spec(4, 5, 12, 30, 1.0);
    auto c = generate_synthetic(spec, 3);
    for (const auto& img : c.images) {
        const auto& sig = spec.signatures[static_cast<std::size_t>(c.category_index(img.category))].labels;
        for (const auto& sub : img.sub_images) {
            CHECK(sub.tags.size() == 10);
            std::set<std::string> distinct;
            for (const auto& tag : sub.tags) {
                CHECK(std::find(sig.begin(), sig.end(), tag.label) != sig.end());
                CHECK(tag.score > 0.0);
                CHECK(tag.score <= 1.0);
                distinct.insert(tag.label);
            }
            CHECK(distinct.size() == sub.tags.size());
            CHECK(std::is_sorted(sub.tags.begin(), sub.tags.end(),
                                 [](const auto& a, const auto& b) { return a.score > b.score; }));
        }
    }
}

TEST_CASE("generate_synthetic rejects bad specs") {
    auto spec = make_disjoint_spec(2, 3, 5, 5, 0.8);
    spec.signature_probability = 0.0;
    CHECK_THROWS_AS(generate_synthetic(spec, 1), Error);
    spec.signature_probability = 1.5;
    CHECK_THROWS_AS(generate_synthetic(spec, 1), Error);
    spec = make_disjoint_spec(2, 3, 5, 5, 0.8);
    spec.signatures[0].labels.resize(1);
    CHECK_THROWS_AS(generate_synthetic(spec, 1), Error);
}

TEST_CASE("split_corpus is stratified") {
    auto c = generate_synthetic(make_disjoint_spec(3, 100, 5, 5, 0.8, 9, 2), 1);
    auto s = split_corpus(c, 0.8, 11);
    std::map<std::string, std::pair<int, int>> counts;
    for (const auto& img : s.images)
        (img.split == Split::Train ? counts[img.category].first : counts[img.category].second)++;
    for (const auto& [cat, tt] : counts) {
        CHECK(tt.first == 80);
        CHECK(tt.second == 20);
    }

    // Only the split field changes.
    REQUIRE(s.images.size() == c.images.size());
    for (std::size_t i = 0; i < c.images.size(); ++i) {
        auto copy = s.images[i];
        copy.split = c.images[i].split;
        CHECK(copy == c.images[i]);
    }
    CHECK(serialize(split_corpus(c, 0.8, 11)) == serialize(s));
}

TEST_CASE("split_corpus keeps one image on each side") {
    Corpus c;
    c.n_slices = 9;
    c.categories = {"a"};
    c.images = {fixtures::uniform_image("1", "a", {"x"}, Split::Unassigned),
                fixtures::uniform_image("2", "a", {"x"}, Split::Unassigned)};
    auto s = split_corpus(c, 0.5, 3);
    CHECK(std::count_if(s.images.begin(), s.images.end(), [](auto& i) { return i.split == Split::Train; }) == 1);
    CHECK(split_corpus(c, 0.99, 3).images[0].split != split_corpus(c, 0.99, 3).images[1].split);

    c.images.pop_back();
    CHECK_THROWS_AS(split_corpus(c, 0.5, 3), Error);
    CHECK_THROWS_AS(split_corpus(c, 1.0, 3), Error);
}
