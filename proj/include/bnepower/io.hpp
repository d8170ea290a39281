#pragma once

// JSON documents for solver and network artifacts, and the CSV writer.

#include "bnepower/ann.hpp"

#include "json.hpp"

#include <iosfwd>
#include <string>
#include <string_view>

namespace bnepower {

using Json = nlohmann::ordered_json;

// Fixed 12-significant-digit rendering; throws InvalidArgument on NaN or infinity.
std::string format_real(Real value);

// RFC 4180 field: quoted when it holds a comma, quote, CR or LF.
std::string csv_field(std::string_view text);

// Header row, then one row per entry; every value goes through format_real.
void write_csv(std::ostream& out, const std::vector<std::string>& columns, const std::vector<std::vector<Real>>& rows);

// {"type_vector", "num_levels", "cells": {"a0,a1,...": {"utilities", "throughputs", "reward"}}}, cells in index order.
Json to_json(const GameMatrixForType& matrix);

Json to_json(const StrategyProfile& profile);
StrategyProfile profile_from_json(const Json& j);

Json to_json(const EquilibriumResult& result, const BayesianGame& game);
std::string to_string(SelectionRoute route);

Json to_json(const KktSolution<Real>& solution);

// {"widths", "seed", "normalization": {"mean", "scale"}, "layers": [{"weights": rows x cols row-major, "bias"}]}
Json to_json(const AnnModel& model);
AnnModel model_from_json(const Json& j);

// {"kind", "own_gain_only", "seed", "inputs", "targets", "split": {"train", "validation", "test"}, "rejected_draws"}
Json to_json(const Dataset& data);
Dataset dataset_from_json(const Json& j);

}  // namespace bnepower
