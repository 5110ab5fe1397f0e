#ifndef MARGIN_CASCADE_MARGIN_CASCADE_HPP
#define MARGIN_CASCADE_MARGIN_CASCADE_HPP

#include "margin_cascade/random.hpp"
#include "margin_cascade/errors.hpp"
#include "margin_cascade/market.hpp"
#include "margin_cascade/cascade.hpp"
#include "margin_cascade/experiments.hpp"
#include "margin_cascade/config.hpp"
#include "margin_cascade/io.hpp"
#include "margin_cascade/driver.hpp"

#endif  // MARGIN_CASCADE_MARGIN_CASCADE_HPP
