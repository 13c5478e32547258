#pragma once

#include <string>
#include <vector>

#include "json.hpp"
#include "lisvar/types.hpp"

namespace lisvar {

// Floats in every artifact are rounded to 9 significant digits so reruns are
// byte-identical across platforms.
double round9(double x);
std::string format9(double x);

// Header row of names, one row per period, every cell a finite float.
Eigen::MatrixXd read_data_csv(const std::string& path,
                              std::vector<std::string>* names = nullptr);
void write_data_csv(const std::string& path, const Eigen::MatrixXd& data,
                    const std::vector<std::string>& names = {});

nlohmann::json matrix_to_json(const Eigen::MatrixXd& m);
Eigen::MatrixXd matrix_from_json(const nlohmann::json& j, const std::string& what);

nlohmann::json to_json(const ReducedForm& rf);
nlohmann::json to_json(const HsvarReducedForm& rf);
nlohmann::json to_json(const StructuralParams& sp);
ReducedForm reduced_form_from_json(const nlohmann::json& j);
HsvarReducedForm hsvar_from_json(const nlohmann::json& j);
StructuralParams structural_from_json(const nlohmann::json& j);

nlohmann::json read_json_file(const std::string& path);
void write_json_file(const std::string& path, const nlohmann::json& j);

}  // namespace lisvar
