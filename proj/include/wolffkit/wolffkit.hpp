#pragma once

#include <wolffkit/absorption.hpp>
#include <wolffkit/capacity.hpp>
#include <wolffkit/common.hpp>
#include <wolffkit/io.hpp>
#include <wolffkit/lorentz.hpp>
#include <wolffkit/measure.hpp>
#include <wolffkit/pde.hpp>
#include <wolffkit/potential.hpp>
#include <wolffkit/report.hpp>
#include <wolffkit/verify.hpp>
