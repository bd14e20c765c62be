#pragma once

#include "modlab/content.hpp"
#include "modlab/counterexamples.hpp"
#include "modlab/duality.hpp"
#include "modlab/error.hpp"
#include "modlab/extended_value.hpp"
#include "modlab/measures.hpp"
#include "modlab/modulus.hpp"
#include "modlab/random_instances.hpp"
#include "modlab/solver/lp.hpp"
#include "modlab/solver/pnorm.hpp"
#include "modlab/space.hpp"
#include "modlab/types.hpp"
