#pragma once

#include <filesystem>
#include <iosfwd>
#include <stdexcept>

#include "gapmort/fit.hpp"
#include "gapmort/forecast.hpp"

namespace gapmort {

/// Raised when an artifact file cannot be parsed.
class FormatError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// Sectioned text format:
///
///   # gapmort fit v1
///   [fit]          key,value lines (model, window, log_lik, ...)
///   [params]       block,label,value
///   [trace]        iteration,log_lik
///   [fitted_gap]   age,year,value
///
/// Numbers are written with shortest round-trip precision, so reading a fit
/// back reproduces its parameters and fitted surfaces bit for bit.
void write_fit(std::ostream &out, const FitResult &fit);
FitResult read_fit(std::istream &in);
void save_fit(const std::filesystem::path &path, const FitResult &fit);
FitResult load_fit(const std::filesystem::path &path);

///   # gapmort forecast v1
///   [forecast]         key,value lines
///   [rwd]              key,value lines (drift, covariance, origin)
///   [period_forecast]  year,<block 1>,<block 2>
///   [gap_forecast]     age,year,value
void write_forecast(std::ostream &out, const ForecastResult &fc);
ForecastResult read_forecast(std::istream &in);
void save_forecast(const std::filesystem::path &path, const ForecastResult &fc);
ForecastResult load_forecast(const std::filesystem::path &path);

} // namespace gapmort
