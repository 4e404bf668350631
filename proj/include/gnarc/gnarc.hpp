#pragma once

// Umbrella header for the count network time series toolkit.

#include "gnarc/baselines.hpp"
#include "gnarc/design.hpp"
#include "gnarc/dists.hpp"
#include "gnarc/eval.hpp"
#include "gnarc/forecast.hpp"
#include "gnarc/gnari.hpp"
#include "gnarc/io.hpp"
#include "gnarc/network.hpp"
#include "gnarc/ngnar.hpp"
#include "gnarc/optimize.hpp"
#include "gnarc/response.hpp"
#include "gnarc/select.hpp"
#include "gnarc/studies.hpp"
