#ifndef ILTI_ILTI_HPP
#define ILTI_ILTI_HPP

#include "ilti/duality_engine.hpp"
#include "ilti/io.hpp"
#include "ilti/model_zoo.hpp"
#include "ilti/observability.hpp"
#include "ilti/spectral_core.hpp"
#include "ilti/time_function_spaces.hpp"

#endif  // ILTI_ILTI_HPP
