#include "unim/quality.hpp"

#include <stdexcept>

namespace unim::quality {

double instance_gq(const std::vector<QualityItem>& items) {
    if (items.empty()) {
        throw std::invalid_argument("instance_gq requires at least one quality item");
    }
    double sum = 0.0;
    for (const auto& item : items) sum += item.score;
    return sum / static_cast<double>(items.size());
}

}  // namespace unim::quality
