#pragma once

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

namespace isa::cli {

std::string format_number(double v);

/// Record of one artifact-producing invocation.
class Manifest {
 public:
  Manifest(std::string command, std::vector<std::string> argv);

  void config(nlohmann::json cfg) { config_ = std::move(cfg); }
  void seed(std::uint64_t s) { seed_ = s; }
  void input(const std::string& role, const std::filesystem::path& path);
  void output(const std::string& role, const std::filesystem::path& path);
  void write(const std::filesystem::path& path) const;

 private:
  std::string command_;
  std::vector<std::string> argv_;
  nlohmann::json config_ = nlohmann::json::object();
  std::optional<std::uint64_t> seed_;
  nlohmann::json inputs_ = nlohmann::json::object();
  nlohmann::json outputs_ = nlohmann::json::object();
  std::chrono::steady_clock::time_point start_;
};

struct Series {
  std::string name;
  std::vector<std::pair<double, double>> points;
};

/// Minimal SVG line chart.
std::string svg_line_plot(const std::vector<Series>& series, const std::string& title,
                          const std::string& x_label, const std::string& y_label);

void write_text(const std::filesystem::path& path, const std::string& text);

}  // namespace isa::cli
