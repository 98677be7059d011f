#pragma once

#include "rankone/error.hpp"
#include "rankone/quadrature.hpp"
#include "rankone/measure.hpp"
#include "rankone/spectral_model.hpp"
#include "rankone/classify.hpp"
#include "rankone/oracle.hpp"
#include "rankone/riccati.hpp"
#include "rankone/model_io.hpp"
