#include "semfeat/semantic.hpp"

#include <algorithm>
#include <cctype>

#include "semfeat/common.hpp"

namespace semfeat {

std::string_view to_string(Proposition p) {
    switch (p) {
        case Proposition::P1: return "p1";
        case Proposition::P2: return "p2";
        case Proposition::P3: return "p3";
        case Proposition::P4: return "p4";
    }
    return "p1";
}

Proposition parse_proposition(std::string_view text) {
    std::string lower;
    for (char c : text) lower.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
    if (lower == "p1") return Proposition::P1;
    if (lower == "p2") return Proposition::P2;
    if (lower == "p3") return Proposition::P3;
    if (lower == "p4") return Proposition::P4;
    throw Error("unknown proposition '" + std::string(text) + "' (expected p1..p4)");
}

std::vector<Proposition> parse_propositions(std::string_view text) {
    std::vector<Proposition> modes;
    std::size_t start = 0;
    while (start <= text.size()) {
        auto comma = text.find(',', start);
        auto token = text.substr(start, comma == std::string_view::npos ? std::string_view::npos
                                                                        : comma - start);
        if (!token.empty()) modes.push_back(parse_proposition(token));
        if (comma == std::string_view::npos) break;
        start = comma + 1;
    }
    if (modes.empty()) throw Error("proposition list must not be empty");
    std::sort(modes.begin(), modes.end());
    modes.erase(std::unique(modes.begin(), modes.end()), modes.end());
    return modes;
}

std::string format_propositions(const std::vector<Proposition>& modes) {
    std::string out;
    for (auto p : modes) {
        if (!out.empty()) out += ',';
        out += to_string(p);
    }
    return out;
}

PairGraph::PairGraph(const PatternDictionary& pattern) {
    for (const auto& [pair, freq] : pattern.pairs) {
        adjacency_[pair.first][pair.second] = freq;
        adjacency_[pair.second][pair.first] = freq;
    }
}

const std::map<std::string, long long>& PairGraph::neighbours(std::string_view label) const {
    static const std::map<std::string, long long> empty;
    auto it = adjacency_.find(label);
    return it == adjacency_.end() ? empty : it->second;
}

bool PairGraph::contains(std::string_view label) const {
    return adjacency_.find(label) != adjacency_.end();
}

namespace {

void sort_related(std::vector<RelatedObject>& out) {
    std::sort(out.begin(), out.end(), [](const RelatedObject& a, const RelatedObject& b) {
        if (a.score != b.score) return a.score > b.score;
        return a.label < b.label;
    });
}

}  // namespace

std::vector<RelatedObject> related_by_proposition(const PairGraph& graph, std::string_view anchor,
                                                  Proposition mode) {
    std::vector<RelatedObject> out;
    const auto& direct = graph.neighbours(anchor);
    if (direct.empty()) return out;

    if (mode == Proposition::P1 || mode == Proposition::P2) {
        for (const auto& [label, freq] : direct) out.push_back({label, freq, mode});
        sort_related(out);
        return out;
    }

    // Strongest direct partner, ties by label (map order).
    std::string strongest;
    long long strongest_freq = 0;
    for (const auto& [label, freq] : direct)
        if (freq > strongest_freq) {
            strongest = label;
            strongest_freq = freq;
        }

    struct Best {
        long long score;
        std::string via;
    };
    std::map<std::string, Best> reached;
    for (const auto& [middle, first_freq] : direct) {
        for (const auto& [label, second_freq] : graph.neighbours(middle)) {
            if (label == anchor || direct.count(label) != 0) continue;
            const long long score = std::min(first_freq, second_freq);
            auto [it, inserted] = reached.try_emplace(label, Best{score, middle});
            if (!inserted && score > it->second.score) it->second = Best{score, middle};
        }
    }
    for (const auto& [label, best] : reached) {
        Proposition via = Proposition::P4;
        if (mode == Proposition::P3 && best.via != strongest) via = Proposition::P3;
        out.push_back({label, best.score, via});
    }
    sort_related(out);
    return out;
}

CandidateSet select_candidates(const ImageRecord& image, int k_cand) {
    if (k_cand < 1) throw Error("semantic", "k_cand must be >= 1");
    CandidateSet set;
    set.image_id = image.image_id;
    for (const auto& sub : image.sub_images)
        for (const auto& tag : sub.tags) ++set.raw_support[tag.label];

    std::vector<std::pair<std::string, int>> ordered(set.raw_support.begin(), set.raw_support.end());
    std::stable_sort(ordered.begin(), ordered.end(),
                     [](const auto& a, const auto& b) { return a.second > b.second; });
    const auto keep = std::min<std::size_t>(ordered.size(), static_cast<std::size_t>(k_cand));
    for (std::size_t i = 0; i < keep; ++i) set.candidates.push_back(ordered[i].first);
    return set;
}

std::set<std::string> raw_labels(const ImageRecord& image) {
    std::set<std::string> labels;
    for (const auto& sub : image.sub_images)
        for (const auto& tag : sub.tags) labels.insert(tag.label);
    return labels;
}

std::vector<SemanticObject> related_union(const PairGraph& graph, const CandidateSet& cands,
                                          const std::set<std::string>& raw,
                                          const std::vector<Proposition>& modes) {
    struct Merged {
        long long score = 0;
        Proposition via = Proposition::P1;
        std::set<std::size_t> candidates;
    };
    std::vector<Proposition> ordered_modes = modes;
    std::sort(ordered_modes.begin(), ordered_modes.end());

    std::map<std::string, Merged> merged;
    for (std::size_t c = 0; c < cands.candidates.size(); ++c) {
        for (auto mode : ordered_modes) {
            for (auto& rel : related_by_proposition(graph, cands.candidates[c], mode)) {
                if (raw.count(rel.label) != 0) continue;
                auto [it, inserted] = merged.try_emplace(rel.label);
                Merged& m = it->second;
                if (inserted || rel.score > m.score) {
                    m.score = rel.score;
                    m.via = rel.via;
                }
                m.candidates.insert(c);
            }
        }
    }

    std::vector<SemanticObject> out;
    out.reserve(merged.size());
    for (auto& [label, m] : merged)
        out.push_back({label, m.score, static_cast<int>(m.candidates.size()), m.via});
    std::sort(out.begin(), out.end(), [](const SemanticObject& a, const SemanticObject& b) {
        if (a.support != b.support) return a.support > b.support;
        if (a.score != b.score) return a.score > b.score;
        return a.label < b.label;
    });
    return out;
}

SemanticObjectSet extract_semantic_objects(const PairGraph& graph, const CandidateSet& cands,
                                           const std::set<std::string>& raw, int s_sem,
                                           const std::vector<Proposition>& modes) {
    if (s_sem < 1) throw Error("semantic", "s_sem must be >= 1");
    if (modes.empty()) throw Error("semantic", "at least one proposition mode is required");
    SemanticObjectSet set;
    set.image_id = cands.image_id;
    set.objects = related_union(graph, cands, raw, modes);
    if (set.objects.size() > static_cast<std::size_t>(s_sem))
        set.objects.resize(static_cast<std::size_t>(s_sem));
    return set;
}

}  // namespace semfeat
