#pragma once

// Candidate selection and retrieval of semantic objects from a pattern
// dictionary. The dictionary is read as a weighted graph: vertices are
// labels, edges are co-occurring pairs weighted by their frequency.

#include <map>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "semfeat/dictionary.hpp"
#include "semfeat/ingest.hpp"

namespace semfeat {

inline constexpr int kDefaultCandidates = 5;
inline constexpr int kDefaultSemanticObjects = 5;

/// Relation rules used to retrieve related objects:
///  P1  direct co-occurrence (graph neighbours),
///  P2  objects sharing a common partner, seen from the anchor (= neighbours),
///  P3  two-hop relation reached through a partner other than the anchor's
///      strongest one,
///  P4  transitive two-hop relation anchor - b - c.
enum class Proposition { P1 = 1, P2 = 2, P3 = 3, P4 = 4 };

std::string_view to_string(Proposition p);
Proposition parse_proposition(std::string_view text);
/// Parses a comma-separated list such as "p1,p4". Result is sorted, unique.
std::vector<Proposition> parse_propositions(std::string_view text);
std::string format_propositions(const std::vector<Proposition>& modes);

class PairGraph {
public:
    PairGraph() = default;
    explicit PairGraph(const PatternDictionary& pattern);

    /// Neighbours of a label with edge frequencies (empty when absent).
    const std::map<std::string, long long>& neighbours(std::string_view label) const;
    bool contains(std::string_view label) const;
    std::size_t vertex_count() const { return adjacency_.size(); }

private:
    std::map<std::string, std::map<std::string, long long>, std::less<>> adjacency_;
};

struct RelatedObject {
    std::string label;
    long long score = 0;
    Proposition via = Proposition::P1;

    friend bool operator==(const RelatedObject&, const RelatedObject&) = default;
};

/// Objects related to `anchor` under one rule, sorted by score descending then
/// label ascending. Two-hop scores are the weaker of the two edges; when a
/// label is reachable several ways the best score is kept.
std::vector<RelatedObject> related_by_proposition(const PairGraph& graph, std::string_view anchor,
                                                  Proposition mode);

struct CandidateSet {
    std::string image_id;
    std::vector<std::string> candidates;
    /// Occurrences of each label across the image's sub-image tag lists.
    std::map<std::string, int> raw_support;
};

/// Top-k labels of an image by occurrence count, ties by label.
CandidateSet select_candidates(const ImageRecord& image, int k_cand = kDefaultCandidates);

/// All labels appearing anywhere in the image's tags.
std::set<std::string> raw_labels(const ImageRecord& image);

struct SemanticObject {
    std::string label;
    long long score = 0;
    /// Number of distinct candidates the object is related to.
    int support = 0;
    Proposition via = Proposition::P1;

    friend bool operator==(const SemanticObject&, const SemanticObject&) = default;
};

struct SemanticObjectSet {
    std::string image_id;
    std::string category;
    std::vector<SemanticObject> objects;
};

/// Merged relations of all candidates under all enabled rules, minus the
/// image's raw labels, before truncation. Ordered by (support desc, score
/// desc, label asc), so objects shared by several candidates come first.
std::vector<SemanticObject> related_union(const PairGraph& graph, const CandidateSet& cands,
                                          const std::set<std::string>& raw,
                                          const std::vector<Proposition>& modes);

/// related_union truncated to the best `s_sem` objects.
SemanticObjectSet extract_semantic_objects(const PairGraph& graph, const CandidateSet& cands,
                                           const std::set<std::string>& raw, int s_sem,
                                           const std::vector<Proposition>& modes);

}  // namespace semfeat
