#pragma once

// Everything at once. Individual headers can be included on their own.

#include "subflow/errors.hpp"
#include "subflow/mesh.hpp"
#include "subflow/field.hpp"
#include "subflow/plap.hpp"
#include "subflow/reaction.hpp"
#include "subflow/energy.hpp"
#include "subflow/resolvent.hpp"
#include "subflow/profiles.hpp"
#include "subflow/parallel.hpp"
#include "subflow/evolve.hpp"
#include "subflow/verify.hpp"
