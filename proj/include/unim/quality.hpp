#pragma once

#include <string>
#include <vector>

#include "unim/seq.hpp"

namespace unim::quality {

// One scored content item of a response: the text body, or one tagged asset.
struct QualityItem {
    std::string item_id;  // tag key ("image1") or "text"
    seq::Modality modality = seq::Modality::Text;
    double score = 0.0;   // in [0, 1]
    bool judged = false;  // true when a judge backend produced the score
    std::string note;     // metric name, or why the item scored 0
};

// Instance-level generation quality: the arithmetic mean over all content
// items. Items whose asset file is missing carry score 0 and pull the mean
// down. Throws std::invalid_argument on an empty list.
double instance_gq(const std::vector<QualityItem>& items);

}  // namespace unim::quality
