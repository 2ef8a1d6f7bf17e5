#pragma once

#include "dkb/contour.hpp"
#include "dkb/dde.hpp"
#include "dkb/errors.hpp"
#include "dkb/hr_sim.hpp"
#include "dkb/linear_stability.hpp"
#include "dkb/mean_field_sim.hpp"
#include "dkb/model.hpp"
#include "dkb/normal_form.hpp"
#include "dkb/parallel.hpp"
#include "dkb/rotating_wave.hpp"
