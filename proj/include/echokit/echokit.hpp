#pragma once

#include "echokit/config.hpp"
#include "echokit/error.hpp"
#include "echokit/fracfilter.hpp"
#include "echokit/glcm.hpp"
#include "echokit/image.hpp"
#include "echokit/io.hpp"
#include "echokit/knn.hpp"
#include "echokit/metrics.hpp"
#include "echokit/mlp.hpp"
#include "echokit/morphology.hpp"
#include "echokit/noise.hpp"
#include "echokit/pipeline.hpp"
#include "echokit/random.hpp"
#include "echokit/synthetic.hpp"
