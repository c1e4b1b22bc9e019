#include <filesystem>
#include <random>

#include "doctest.h"
#include "fixtures.hpp"
#include "oracles.hpp"
#include "semfeat/common.hpp"
#include "semfeat/dictionary.hpp"

using namespace semfeat;

namespace {

RawDictionary raw_of(std::vector<std::string> tokens, int segment = 0) {
    RawDictionary raw;
    raw.category = "c";
    for (const auto& t : tokens) ++raw.counts[t];
    raw.total = static_cast<long long>(tokens.size());
    raw.segment_length = segment;
    raw.tokens = std::move(tokens);
    return raw;
}

std::map<oracle::Pair, long long> as_oracle(const PatternDictionary& p) {
    std::map<oracle::Pair, long long> out;
    for (const auto& [pair, n] : p.pairs) out[{pair.first, pair.second}] = n;
    return out;
}

std::vector<std::string> random_stream(std::mt19937_64& rng) {
    std::uniform_int_distribution<int> length(0, 500), alphabet(1, 30);
    const int n = length(rng), a = alphabet(rng);
    std::uniform_int_distribution<int> symbol(0, a - 1);
    std::vector<std::string> tokens;
    for (int i = 0; i < n; ++i) tokens.push_back("t" + std::to_string(symbol(rng)));
    return tokens;
}

Corpus corpus_of(std::vector<ImageRecord> images) {
    Corpus c;
    c.n_slices = static_cast<int>(images.front().sub_images.size());
    c.k_tags = static_cast<int>(images.front().sub_images.front().tags.size());
    for (auto& img : images)
        if (std::find(c.categories.begin(), c.categories.end(), img.category) == c.categories.end())
            c.categories.push_back(img.category);
    c.images = std::move(images);
    return c;
}

}  // namespace

TEST_CASE("raw dictionary sizes") {
    auto c = generate_synthetic(make_disjoint_spec(2, 120, 12, 20, 0.8, 9, 10), 5);
    for (auto& img : c.images) img.split = Split::Train;
    CHECK(build_raw_dictionary(c, "category_00", 100).total == 9000);
    CHECK(build_raw_dictionary(c, "category_00", 1).total == 90);
    CHECK(build_raw_dictionary(c, "category_00", 100).segment_length == 10);
}

TEST_CASE("raw dictionary concatenates in corpus order and uses training images only") {
    auto c = corpus_of({fixtures::image("1", "x", {{"a", "b"}}), fixtures::image("2", "y", {{"q"}}),
                        fixtures::image("3", "x", {{"z"}}, Split::Test), fixtures::image("4", "x", {{"c"}})});
    c.k_tags = 0;
    auto raw = build_raw_dictionary(c, "x");
    CHECK(raw.tokens == std::vector<std::string>{"a", "b", "c"});
    CHECK(raw.counts == std::map<std::string, long long>{{"a", 1}, {"b", 1}, {"c", 1}});
    CHECK(raw.total == 3);

    c.images[1].split = Split::Test;
    CHECK_THROWS_AS(build_raw_dictionary(c, "y"), Error);
    CHECK_THROWS_AS(build_raw_dictionary(c, "nope"), Error);
}

TEST_CASE("pattern dictionary examples") {
    auto p = build_pattern_dictionary(raw_of({"a", "b", "a", "b", "c"}));
    CHECK(p.pairs.size() == 2);
    CHECK(p.pairs.at(LabelPair::of("b", "a")) == 3);
    CHECK(p.pairs.at(LabelPair::of("b", "c")) == 1);
    CHECK(p.ranked.front() == RankedPair{LabelPair::of("a", "b"), 3});

    CHECK(build_pattern_dictionary(raw_of({"a", "a"})).pairs.empty());
    CHECK(build_pattern_dictionary(raw_of({"a"})).pairs.empty());

    auto xy = build_pattern_dictionary(raw_of({"x", "y"}));
    CHECK(xy.ranked == std::vector<RankedPair>{{LabelPair::of("x", "y"), 1}});
}

TEST_CASE("ranked ties fall back to pair order") {
    auto p = build_pattern_dictionary(raw_of({"d", "c", "b", "a"}));
    REQUIRE(p.ranked.size() == 3);
    CHECK(p.ranked[0].pair == LabelPair::of("a", "b"));
    CHECK(p.ranked[1].pair == LabelPair::of("b", "c"));
    CHECK(p.ranked[2].pair == LabelPair::of("c", "d"));
}

TEST_CASE("pattern counts match a sliding-window counter") {
    std::mt19937_64 rng(2024);
    for (int trial = 0; trial < 60; ++trial) {
        auto tokens = random_stream(rng);
        auto p = build_pattern_dictionary(raw_of(tokens));
        CHECK(as_oracle(p) == oracle::sliding_window_pairs(tokens));

        long long distinct_adjacent = 0, sum = 0;
        for (std::size_t i = 0; i + 1 < tokens.size(); ++i) distinct_adjacent += tokens[i] != tokens[i + 1];
        for (const auto& [pair, n] : p.pairs) sum += n;
        CHECK(sum == distinct_adjacent);

        auto reversed = tokens;
        std::reverse(reversed.begin(), reversed.end());
        CHECK(build_pattern_dictionary(raw_of(reversed)).pairs == p.pairs);
    }
}

TEST_CASE("pattern options") {
    auto raw = raw_of({"a", "b", "c", "d"}, 2);
    PatternOptions both;
    both.count_both_directions = true;
    CHECK(build_pattern_dictionary(raw, both).pairs.at(LabelPair::of("a", "b")) == 2);

    PatternOptions within;
    within.within_subimage = true;
    auto p = build_pattern_dictionary(raw, within);
    CHECK(p.pairs.size() == 2);
    CHECK(p.pairs.count(LabelPair::of("b", "c")) == 0);
}

TEST_CASE("probability") {
    auto raw = raw_of({"a", "a", "a", "b"});
    CHECK(probability(raw, "a") == 0.75);
    CHECK(probability(raw, "zzz") == 0.0);
    CHECK(frequency(raw, "a") == 3);

    std::vector<std::string> uniform;
    for (int i = 0; i < 16; ++i) uniform.push_back("l" + std::to_string(i));
    auto u = raw_of(uniform);
    for (const auto& l : uniform) CHECK(probability(u, l) == 0.0625);

    std::mt19937_64 rng(9);
    auto r = raw_of(random_stream(rng));
    double total = 0.0;
    for (const auto& [label, n] : r.counts) total += probability(r, label);
    if (!r.counts.empty()) CHECK(total == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("build_dictionaries is deterministic and worker-independent") {
    auto c = split_corpus(generate_synthetic(make_disjoint_spec(4, 20, 12, 30, 0.8), 3), 0.8, 3);
    auto one = build_dictionaries(c, 100, {}, 1);
    auto many = build_dictionaries(c, 100, {}, 4);
    REQUIRE(one.size() == 4);
    for (std::size_t i = 0; i < one.size(); ++i) {
        CHECK(one[i].raw.category == c.categories[i]);
        CHECK(one[i].pattern.ranked == many[i].pattern.ranked);
        CHECK(dictionary_to_json(one[i]) == dictionary_to_json(many[i]));
    }
}

TEST_CASE("dictionary JSON round trip") {
    auto c = split_corpus(generate_synthetic(make_disjoint_spec(2, 10, 12, 30, 0.8), 4), 0.8, 4);
    auto dicts = build_dictionaries(c, 100);
    auto back = dictionary_from_json(dictionary_to_json(dicts[0]));
    CHECK(back.raw.counts == dicts[0].raw.counts);
    CHECK(back.raw.total == dicts[0].raw.total);
    CHECK(back.raw.token_digest == dicts[0].raw.token_digest);
    CHECK(back.pattern.pairs == dicts[0].pattern.pairs);
    CHECK(back.pattern.ranked == dicts[0].pattern.ranked);
    CHECK(dictionary_to_json(back) == dictionary_to_json(dicts[0]));

    auto dir = std::filesystem::temp_directory_path() / "semfeat_dict_test";
    std::filesystem::remove_all(dir);
    save_dictionaries(dir.string(), dicts);
    auto loaded = load_dictionaries(dir.string(), c.categories);
    REQUIRE(loaded.size() == 2);
    CHECK(loaded[1].pattern.ranked == dicts[1].pattern.ranked);
    CHECK_THROWS_AS(load_dictionaries(dir.string(), {"missing"}), Error);
    std::filesystem::remove_all(dir);
}
