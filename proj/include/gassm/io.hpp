#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include <json.hpp>

#include "gassm/data.hpp"
#include "gassm/model.hpp"
#include "gassm/simulate.hpp"

namespace gassm {

// CSV layout: header row; the selection and outcome columns are located by
// name, every other column is a covariate (kept in file order).  Outcome
// cells on unselected rows may be empty, NA, or nan; anywhere else a cell
// must parse as a finite number.  Errors carry the 1-based data row.
Dataset read_csv(const std::string& path, const std::string& sel_col = "sel",
                 const std::string& out_col = "out");
void write_csv(const Dataset& d, const std::string& path,
               const std::string& sel_col = "sel",
               const std::string& out_col = "out");

ModelSpec spec_from_json(const nlohmann::json& j);
nlohmann::json spec_to_json(const ModelSpec& s);
ModelSpec read_spec(const std::string& path);

// Fitted model round trip.  Design matrices are not stored; term layouts are,
// and the centering transform Z is rebuilt from the stored basis column sums,
// so a reloaded model predicts identically.
nlohmann::json model_to_json(const FittedModel& m);
FittedModel model_from_json(const nlohmann::json& j);
void write_model(const FittedModel& m, const std::string& path);
FittedModel read_model(const std::string& path);

// One curve block per smooth: eq, column, x, fit, se, lower, upper.
void write_curves_csv(const std::vector<SmoothCurve>& curves,
                      const std::string& path);

nlohmann::json mc_to_json(const MCReport& r);
MCReport mc_from_json(const nlohmann::json& j);
// One row per estimator x metric; parameter rows carry truth/sd/bias/rmse,
// mise/test-error/eta2-mse rows only the value.
void write_mc_csv(const MCReport& r, const std::string& path);
void append_mc_csv(const MCReport& r, std::ostream& os, bool header);

std::string format_double(double v);  // shortest exact round trip

}  // namespace gassm
