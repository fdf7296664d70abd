#pragma once

#include <mutex>

#include "barymorse/surface.hpp"

namespace barymorse::detail {

// FFTW planning is not thread-safe; execution on caller buffers is.
std::mutex& fftw_plan_mutex();

SurfacePtr make_torus(int n, double eta);
SurfacePtr make_sphere(int n, double eta);

}  // namespace barymorse::detail
