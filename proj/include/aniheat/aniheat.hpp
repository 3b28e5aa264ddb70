#pragma once

// Umbrella header for the anisotropic heat propagator library.

#include "aniheat/diffusivity.hpp"
#include "aniheat/errors.hpp"
#include "aniheat/estimates.hpp"
#include "aniheat/experiment.hpp"
#include "aniheat/fft.hpp"
#include "aniheat/fit.hpp"
#include "aniheat/grid.hpp"
#include "aniheat/kernel.hpp"
#include "aniheat/manifest.hpp"
#include "aniheat/mollifier.hpp"
#include "aniheat/propagator.hpp"
#include "aniheat/quadrature.hpp"
#include "aniheat/rng.hpp"
#include "aniheat/runner.hpp"
#include "aniheat/scenarios.hpp"
#include "aniheat/spd.hpp"
#include "aniheat/version.hpp"
#include "aniheat/veryweak.hpp"
