#pragma once

#include "dbspace/types.hpp"
#include "dbspace/linops.hpp"
#include "dbspace/canonical.hpp"
#include "dbspace/efun.hpp"
#include "dbspace/debranges.hpp"
#include "dbspace/extensions.hpp"
