#pragma once

// Umbrella header: simulation of operator fractional Brownian motion via its
// spectral representation, matrix-normalized partial sums of Hermite
// functionals of stationary Gaussian vector sequences, and the statistical
// checks tying the two together.

#include "ofbmlab/approx.hpp"
#include "ofbmlab/corr.hpp"
#include "ofbmlab/fft.hpp"
#include "ofbmlab/gaussgen.hpp"
#include "ofbmlab/hermite.hpp"
#include "ofbmlab/linop.hpp"
#include "ofbmlab/ofbm.hpp"
#include "ofbmlab/parallel.hpp"
#include "ofbmlab/quadrature.hpp"
#include "ofbmlab/rng.hpp"
#include "ofbmlab/serialize.hpp"
#include "ofbmlab/stats.hpp"
