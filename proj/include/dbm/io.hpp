// SPDX-License-Identifier: Apache-2.0
//
// JSON and CSV serialization of parameters and results.
#pragma once

#include <json.hpp>
#include <ostream>
#include <string>
#include <vector>

#include "dbm/finite_volume.hpp"
#include "dbm/machine.hpp"
#include "dbm/rs_solver.hpp"
#include "dbm/sk_chain_bound.hpp"

namespace dbm {

using Json = nlohmann::ordered_json;

// {"K": int, "beta": [...], "lambda": [...], "fields": [{"kind": ...}, ...]}.
// Unknown keys are ignored so a config file can carry other sections.
// Throws DomainError on a malformed document.
ModelParams model_from_json(const Json& doc);
Json to_json(const ModelParams& params);

FieldSpec field_from_json(const Json& doc);
Json to_json(const FieldSpec& field);

Json to_json(const RegionVerdict& verdict);
Json to_json(const RsSolution& solution);
Json to_json(const RsCertificates& certificates);
// RsSolution-shaped fields plus "a", "certified" and "boundary_suspect".
Json to_json(const BoundMaximum& bound);
Json to_json(const PressureEstimate& estimate);
Json to_json(const TrendRow& row);
Json to_json(const TrendReport& report);
Json to_json(const CovarianceReport& report);

// Numbers with 17 significant digits; non-finite numbers become null.
std::string dump_json(const Json& doc, int indent = 2);

// Shortest round-trip decimal form.
std::string format_shortest(double x);

// One CSV row per object; nested arrays flatten to name[i] columns. The
// header is the union of keys in first-seen order.
void write_csv(const std::vector<Json>& rows, std::ostream& out);

// Columns N, method, mean, std_error, p_annealed, gap, flags.
void write_trend_csv(const TrendReport& report, std::ostream& out);

}  // namespace dbm
