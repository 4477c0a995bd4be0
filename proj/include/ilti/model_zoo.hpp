#ifndef ILTI_MODEL_ZOO_HPP
#define ILTI_MODEL_ZOO_HPP

#include "ilti/model_zoo/heat.hpp"
#include "ilti/model_zoo/heatwave.hpp"
#include "ilti/model_zoo/wave.hpp"

#endif  // ILTI_MODEL_ZOO_HPP
