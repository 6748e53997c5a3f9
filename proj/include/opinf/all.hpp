#pragma once

// Umbrella header for the whole library.

#include "opinf/dataset.hpp"
#include "opinf/eval.hpp"
#include "opinf/fom/burgers.hpp"
#include "opinf/fom/cavity.hpp"
#include "opinf/fom/heat.hpp"
#include "opinf/opinf.hpp"
#include "opinf/parametric.hpp"
#include "opinf/pod.hpp"
#include "opinf/rom.hpp"
#include "opinf/tools.hpp"
