#pragma once

#include "clearing/errors.hpp"
#include "clearing/lp.hpp"
#include "clearing/mip.hpp"
#include "clearing/model.hpp"
#include "clearing/mps.hpp"
#include "clearing/ocm.hpp"
#include "clearing/oracle.hpp"
#include "clearing/pcm_gbd.hpp"
#include "clearing/report.hpp"
#include "clearing/results.hpp"
#include "clearing/scenario.hpp"
#include "clearing/verify.hpp"
