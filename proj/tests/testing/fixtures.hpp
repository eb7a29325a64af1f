#pragma once

#include "cscdet/evaluation.hpp"

#include <vector>

namespace cscdet::testing {

/// Ten hand-placed images: true positives, duplicates, false positives, score ties,
/// detections on ignore regions, occluded/short/non-person annotations and empty images.
struct EvalFixture
{
    std::vector<std::vector<Detection>> dets;
    std::vector<std::vector<Annotation>> annos;
};

EvalFixture ten_image_fixture();

} // namespace cscdet::testing
