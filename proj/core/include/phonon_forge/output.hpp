#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "phonon_forge/dynamics.hpp"
#include "phonon_forge/heralding_budget.hpp"
#include "phonon_forge/phase_space.hpp"

namespace phonon_forge {

// 17 significant digits; non-finite values print as nan / inf / -inf.
std::string format_double(double x);

// Insertion-ordered JSON value for output files. Numbers use format_double
// (non-finite numbers become null).
class JsonOut {
public:
    using Object = std::vector<std::pair<std::string, JsonOut>>;
    using Array = std::vector<JsonOut>;

    JsonOut() : v_(nullptr) {}
    JsonOut(double x) : v_(x) {}
    JsonOut(int x) : v_(static_cast<std::int64_t>(x)) {}
    JsonOut(std::int64_t x) : v_(x) {}
    JsonOut(std::uint64_t x) : v_(static_cast<std::int64_t>(x)) {}
    JsonOut(bool x) : v_(x) {}
    JsonOut(const char* s) : v_(std::string(s)) {}
    JsonOut(std::string s) : v_(std::move(s)) {}
    JsonOut(const std::vector<double>& xs);

    static JsonOut object() { JsonOut j; j.v_ = Object{}; return j; }
    static JsonOut array() { JsonOut j; j.v_ = Array{}; return j; }

    JsonOut& set(const std::string& key, JsonOut value);
    JsonOut& push(JsonOut value);

    std::string dump() const;

private:
    void write(std::string& out, int indent) const;

    std::variant<std::nullptr_t, bool, std::int64_t, double, std::string, Object, Array> v_;
};

void write_text(const std::filesystem::path& path, const std::string& content);

// Columns of equal length under a header row.
void write_csv(const std::filesystem::path& path, const std::vector<std::string>& header,
               const std::vector<std::vector<double>>& columns);

void write_curve_csv(const std::filesystem::path& path, const VarianceCurve& curve);
void write_marginal_csv(const std::filesystem::path& path, const Marginal& m);

// stem.csv holds the value matrix (first row P coordinates, first column X
// coordinates); stem.json the grid metadata merged with extra.
void write_grid(const std::filesystem::path& stem, const PhaseSpaceGrid& grid, JsonOut extra = JsonOut::object());

JsonOut to_json(const BudgetReport& r);
JsonOut to_json(const SystemParams& p);
JsonOut to_json(const SpadConfig& s);

}  // namespace phonon_forge
