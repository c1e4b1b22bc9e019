#pragma once

// Small hand-built corpora shared by the unit tests.

#include <string>
#include <vector>

#include "semfeat/ingest.hpp"

namespace fixtures {

/// Image whose sub-image s carries labels[s]; scores descend with rank.
inline semfeat::ImageRecord image(const std::string& id, const std::string& category,
                                  const std::vector<std::vector<std::string>>& labels,
                                  semfeat::Split split = semfeat::Split::Train) {
    semfeat::ImageRecord img;
    img.image_id = id;
    img.category = category;
    img.split = split;
    for (std::size_t s = 0; s < labels.size(); ++s) {
        semfeat::SubImageTags sub;
        sub.index = static_cast<int>(s);
        double score = 0.9;
        for (const auto& l : labels[s]) {
            sub.tags.push_back({l, score});
            score -= 0.05;
        }
        img.sub_images.push_back(std::move(sub));
    }
    return img;
}

/// Nine sub-images, each holding the same `tags`.
inline semfeat::ImageRecord uniform_image(const std::string& id, const std::string& category,
                                          const std::vector<std::string>& tags,
                                          semfeat::Split split = semfeat::Split::Train) {
    return image(id, category, std::vector<std::vector<std::string>>(9, tags), split);
}

inline std::string record_line(const std::string& id, const std::string& category, int n_slices, int k_tags,
                               int short_subimage = -1) {
    std::string line = "{\"image_id\":\"" + id + "\",\"category\":\"" + category +
                       "\",\"split\":\"unassigned\",\"sub_images\":[";
    for (int s = 0; s < n_slices; ++s) {
        line += (s ? "," : "") + std::string("{\"index\":") + std::to_string(s) + ",\"tags\":[";
        const int count = s == short_subimage ? k_tags - 1 : k_tags;
        for (int t = 0; t < count; ++t)
            line += (t ? "," : "") + std::string("{\"label\":\"Obj ") + std::to_string(t) +
                    "\",\"score\":" + std::to_string(0.9 - 0.01 * t) + "}";
        line += "]}";
    }
    return line + "]}";
}

}  // namespace fixtures
