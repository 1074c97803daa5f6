#pragma once

// Umbrella header.

#include "qibem/config.hpp"
#include "qibem/curve.hpp"
#include "qibem/galerkin.hpp"
#include "qibem/gauss.hpp"
#include "qibem/harness.hpp"
#include "qibem/kernels.hpp"
#include "qibem/moments.hpp"
#include "qibem/presets.hpp"
#include "qibem/quadrature.hpp"
#include "qibem/quasi_interpolation.hpp"
#include "qibem/reference.hpp"
#include "qibem/spline.hpp"
