#pragma once

#include "dsem/errors.hpp"
#include "dsem/gplp.hpp"
#include "dsem/measures.hpp"
#include "dsem/rational.hpp"
#include "dsem/relational.hpp"
#include "dsem/rules.hpp"
#include "dsem/sip.hpp"
#include "dsem/synth.hpp"
