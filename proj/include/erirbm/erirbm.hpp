#pragma once

#include "erirbm/baselines.hpp"
#include "erirbm/classify.hpp"
#include "erirbm/dataset.hpp"
#include "erirbm/eri.hpp"
#include "erirbm/filter_grid.hpp"
#include "erirbm/image.hpp"
#include "erirbm/matrix.hpp"
#include "erirbm/model_io.hpp"
#include "erirbm/orientation.hpp"
#include "erirbm/rbm.hpp"
