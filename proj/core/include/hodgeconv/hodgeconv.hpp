#pragma once

#include "hodgeconv/complex.hpp"
#include "hodgeconv/errors.hpp"
#include "hodgeconv/filters.hpp"
#include "hodgeconv/io.hpp"
#include "hodgeconv/laplacian.hpp"
#include "hodgeconv/layers.hpp"
#include "hodgeconv/pooling.hpp"
#include "hodgeconv/train.hpp"
