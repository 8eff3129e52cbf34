#pragma once

#include "mixmemb/errors.hpp"
#include "mixmemb/types.hpp"
#include "mixmemb/rng.hpp"
#include "mixmemb/distributions.hpp"
#include "mixmemb/model.hpp"
#include "mixmemb/sampler.hpp"
#include "mixmemb/tempering.hpp"
#include "mixmemb/chain.hpp"
#include "mixmemb/parallel.hpp"
#include "mixmemb/initializer.hpp"
#include "mixmemb/modelselect.hpp"
#include "mixmemb/postprocess.hpp"
#include "mixmemb/simgen.hpp"
#include "mixmemb/io.hpp"
#include "mixmemb/config.hpp"
#include "mixmemb/commands.hpp"
