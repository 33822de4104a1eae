#pragma once

#include "robust_doa/admm.hpp"
#include "robust_doa/array_model.hpp"
#include "robust_doa/bench.hpp"
#include "robust_doa/music.hpp"
#include "robust_doa/offgrid.hpp"
#include "robust_doa/peaks.hpp"
#include "robust_doa/prox.hpp"
#include "robust_doa/types.hpp"
