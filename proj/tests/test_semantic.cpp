#include <random>

#include "doctest.h"
#include "fixtures.hpp"
#include "oracles.hpp"
#include "semfeat/common.hpp"
#include "semfeat/semantic.hpp"

using namespace semfeat;

namespace {

PatternDictionary pattern_of(const std::map<oracle::Pair, long long>& pairs) {
    PatternDictionary p;
    for (const auto& [pair, n] : pairs) p.pairs[LabelPair::of(pair.first, pair.second)] = n;
    return p;
}

std::map<oracle::Pair, long long> random_pairs(std::mt19937_64& rng, int max_vertices) {
    std::uniform_int_distribution<int> size(2, max_vertices);
    const int n = size(rng);
    std::uniform_real_distribution<double> coin(0.0, 1.0);
    const double density = coin(rng) * 0.3;
    std::uniform_int_distribution<long long> weight(1, 9);
    std::map<oracle::Pair, long long> pairs;
    for (int a = 0; a < n; ++a)
        for (int b = a + 1; b < n; ++b)
            if (coin(rng) < density) {
                auto x = "v" + std::to_string(a), y = "v" + std::to_string(b);
                pairs[x < y ? oracle::Pair{x, y} : oracle::Pair{y, x}] = weight(rng);
            }
    return pairs;
}

std::map<std::string, long long> as_map(const std::vector<RelatedObject>& objects) {
    std::map<std::string, long long> out;
    for (const auto& o : objects) out[o.label] = o.score;
    return out;
}

const std::map<oracle::Pair, long long> kWorked{{{"o1", "o2"}, 7}, {{"o2", "o3"}, 4}, {{"o4", "o5"}, 9}};

}  // namespace

TEST_CASE("worked example") {
    PairGraph g(pattern_of(kWorked));
    CHECK(related_by_proposition(g, "o1", Proposition::P1) ==
          std::vector<RelatedObject>{{"o2", 7, Proposition::P1}});
    CHECK(related_by_proposition(g, "o1", Proposition::P4) ==
          std::vector<RelatedObject>{{"o3", 4, Proposition::P4}});
    CHECK(related_by_proposition(g, "o4", Proposition::P4).empty());
    CHECK(related_by_proposition(g, "missing", Proposition::P1).empty());

    CandidateSet cands;
    cands.candidates = {"o1", "o2"};
    auto set = extract_semantic_objects(g, cands, {"o1", "o2"}, 5, {Proposition::P1, Proposition::P4});
    REQUIRE(set.objects.size() == 1);
    CHECK(set.objects[0].label == "o3");
    CHECK(set.objects[0].support == 2);
}

TEST_CASE("P2 and P3 views") {
    // anchor a: strong edge to b, weak edge to c; b-d and c-e reach two hops.
    std::map<oracle::Pair, long long> pairs{{{"a", "b"}, 5}, {{"a", "c"}, 2}, {{"b", "d"}, 3}, {{"c", "e"}, 6}};
    PairGraph g(pattern_of(pairs));
    CHECK(as_map(related_by_proposition(g, "a", Proposition::P2)) ==
          as_map(related_by_proposition(g, "a", Proposition::P1)));
    auto p3 = related_by_proposition(g, "a", Proposition::P3);
    REQUIRE(p3.size() == 2);
    CHECK(p3[0] == RelatedObject{"d", 3, Proposition::P4});
    CHECK(p3[1] == RelatedObject{"e", 2, Proposition::P3});
    CHECK(as_map(p3) == as_map(related_by_proposition(g, "a", Proposition::P4)));
}

TEST_CASE("propositions match BFS on random graphs") {
    std::mt19937_64 rng(77);
    for (int trial = 0; trial < 40; ++trial) {
        auto pairs = random_pairs(rng, 50);
        PairGraph g(pattern_of(pairs));
        oracle::DenseGraph dense(pairs);
        for (const auto& v : dense.names) {
            CHECK(as_map(related_by_proposition(g, v, Proposition::P1)) == oracle::bfs_related(dense, v, 1));
            CHECK(as_map(related_by_proposition(g, v, Proposition::P4)) == oracle::bfs_related(dense, v, 2));
            // Symmetry of direct relations.
            for (const auto& o : related_by_proposition(g, v, Proposition::P1)) {
                auto back = as_map(related_by_proposition(g, o.label, Proposition::P1));
                CHECK(back.at(v) == o.score);
            }
        }
    }
}

TEST_CASE("related objects are ordered by score then label") {
    std::map<oracle::Pair, long long> pairs{{{"a", "z"}, 2}, {{"a", "m"}, 2}, {{"a", "b"}, 5}};
    auto out = related_by_proposition(PairGraph(pattern_of(pairs)), "a", Proposition::P1);
    REQUIRE(out.size() == 3);
    CHECK(out[0].label == "b");
    CHECK(out[1].label == "m");
    CHECK(out[2].label == "z");
}

TEST_CASE("candidate selection") {
    auto img = fixtures::image("i", "c", {{"a", "b", "c"}, {"b", "c", "d"}, {"c", "d", "e"}});
    auto cands = select_candidates(img, 2);
    CHECK(cands.candidates == std::vector<std::string>{"c", "b"});
    CHECK(cands.raw_support.at("c") == 3);
    CHECK(select_candidates(img, 10).candidates.size() == 5);
    CHECK(raw_labels(img) == std::set<std::string>{"a", "b", "c", "d", "e"});
    CHECK_THROWS_AS(select_candidates(img, 0), Error);
}

TEST_CASE("extraction matches the closure oracle") {
    std::mt19937_64 rng(5);
    std::uniform_int_distribution<int> pick(0, 29), kc(1, 6), ks(1, 8), mode(0, 2);
    for (int trial = 0; trial < 150; ++trial) {
        auto pairs = random_pairs(rng, 30);
        PairGraph g(pattern_of(pairs));
        const int k_cand = kc(rng), s_sem = ks(rng);

        std::vector<std::vector<std::string>> subs(9);
        for (auto& sub : subs)
            for (int t = 0; t < 3; ++t) {
                auto l = "v" + std::to_string(pick(rng));
                if (std::find(sub.begin(), sub.end(), l) == sub.end()) sub.push_back(l);
            }
        auto img = fixtures::image("i", "c", subs);
        auto cands = select_candidates(img, k_cand);
        auto raw = raw_labels(img);

        const int m = mode(rng);
        std::vector<Proposition> modes = m == 0   ? std::vector<Proposition>{Proposition::P1}
                                         : m == 1 ? std::vector<Proposition>{Proposition::P4}
                                                  : std::vector<Proposition>{Proposition::P1, Proposition::P4};
        auto got = extract_semantic_objects(g, cands, raw, s_sem, modes);
        auto expected = oracle::closure(pairs, cands.candidates, raw, m != 1, m != 0,
                                        static_cast<std::size_t>(s_sem));
        REQUIRE(got.objects.size() == expected.size());
        for (std::size_t i = 0; i < expected.size(); ++i) {
            CHECK(got.objects[i].label == expected[i].label);
            CHECK(got.objects[i].score == expected[i].score);
            CHECK(got.objects[i].support == expected[i].support);
            CHECK(raw.count(got.objects[i].label) == 0);
        }
        CHECK(got.objects.size() <= static_cast<std::size_t>(s_sem));

        // Growing s_sem only appends.
        auto wider = extract_semantic_objects(g, cands, raw, s_sem + 3, modes);
        REQUIRE(wider.objects.size() >= got.objects.size());
        CHECK(std::equal(got.objects.begin(), got.objects.end(), wider.objects.begin()));

        // Scaling every frequency keeps the selected labels.
        auto scaled = pairs;
        for (auto& [p, w] : scaled) w *= 3;
        auto s = extract_semantic_objects(PairGraph(pattern_of(scaled)), cands, raw, s_sem, modes);
        REQUIRE(s.objects.size() == got.objects.size());
        for (std::size_t i = 0; i < s.objects.size(); ++i) {
            CHECK(s.objects[i].label == got.objects[i].label);
            CHECK(s.objects[i].score == 3 * got.objects[i].score);
        }
    }
}

TEST_CASE("extraction argument checks") {
    PairGraph g(pattern_of(kWorked));
    CandidateSet cands;
    cands.candidates = {"o1"};
    CHECK_THROWS_AS(extract_semantic_objects(g, cands, {}, 0, {Proposition::P1}), Error);
    CHECK_THROWS_AS(extract_semantic_objects(g, cands, {}, 3, {}), Error);
}

TEST_CASE("proposition parsing") {
    CHECK(parse_propositions("p4,P1,p4") == std::vector<Proposition>{Proposition::P1, Proposition::P4});
    CHECK(format_propositions({Proposition::P1, Proposition::P3}) == "p1,p3");
    CHECK_THROWS_AS(parse_propositions("p5"), Error);
}
