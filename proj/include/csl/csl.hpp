#pragma once

#include "csl/error.hpp"
#include "csl/numerics/linalg.hpp"
#include "csl/numerics/matrix.hpp"
#include "csl/numerics/parallel.hpp"
#include "csl/numerics/rng.hpp"
#include "csl/numerics/transforms.hpp"
#include "csl/subspace.hpp"
#include "csl/projection.hpp"
#include "csl/synth.hpp"
#include "csl/capbench.hpp"
#include "csl/tasks/visualize.hpp"
#include "csl/tasks/detect.hpp"
#include "csl/tasks/cluster.hpp"
