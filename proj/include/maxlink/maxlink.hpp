#pragma once

#include "maxlink/error.hpp"
#include "maxlink/numerics/linalg.hpp"
#include "maxlink/numerics/normal.hpp"
#include "maxlink/numerics/mvn.hpp"
#include "maxlink/msvar/model.hpp"
#include "maxlink/msvar/stacked.hpp"
#include "maxlink/msvar/simulate.hpp"
#include "maxlink/measures/kernel.hpp"
#include "maxlink/measures/shifts.hpp"
#include "maxlink/measures/regime_tree.hpp"
#include "maxlink/measures/posterior.hpp"
#include "maxlink/actuarial/life_table.hpp"
#include "maxlink/pricing/claims.hpp"
#include "maxlink/pricing/options.hpp"
#include "maxlink/pricing/premium.hpp"
#include "maxlink/hedging/hedging.hpp"
#include "maxlink/mc/engine.hpp"
#include "maxlink/mc/products.hpp"
#include "maxlink/io/json.hpp"
