#pragma once

#include "shiftbp/cli.hpp"
#include "shiftbp/construct.hpp"
#include "shiftbp/error.hpp"
#include "shiftbp/genfun.hpp"
#include "shiftbp/io.hpp"
#include "shiftbp/law.hpp"
#include "shiftbp/roots.hpp"
#include "shiftbp/simulate.hpp"
#include "shiftbp/verify.hpp"
