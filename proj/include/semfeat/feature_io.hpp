#pragma once

// Feature file formats.
//
// CSV:       header `image_id,label,v1,...,vd`, one row per image.
// svmlight:  `<label-index> <attr>:<value> ...` with 1-based attributes and
//            zero values omitted. A leading `# semfeat dim=<d> categories=<a>,<b>`
//            comment records the dimension and label names; each row ends
//            with `# <image_id>`.
//
// Values are written in shortest round-trip form, so reading a file back
// reproduces the vectors bit for bit.

#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

#include "semfeat/features.hpp"

namespace semfeat {

enum class FeatureFormat { Csv, Svmlight };

std::string_view to_string(FeatureFormat format);
FeatureFormat parse_feature_format(std::string_view name);
/// Picks the format from the extension (.csv, otherwise svmlight).
FeatureFormat format_from_path(std::string_view path);

struct FeatureTable {
    std::vector<std::string> categories;
    std::size_t dimension = 0;
    std::vector<FeatureVector> rows;
};

void write_features(std::ostream& out, const FeatureTable& table, FeatureFormat format);
FeatureTable read_features(std::istream& in, FeatureFormat format);

void save_features(const std::string& path, const FeatureTable& table, FeatureFormat format);
FeatureTable load_features(const std::string& path, FeatureFormat format);

}  // namespace semfeat
