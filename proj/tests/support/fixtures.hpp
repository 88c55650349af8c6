#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "chartinsight/ingest.hpp"

namespace fixtures {

std::filesystem::path data_dir();
std::string read_file(const std::filesystem::path& p);

// Google/Apple monthly prices, 2000-2010.
chartinsight::BoundChart stocks();
// UK/US/India yearly emissions, 1750-2020.
chartinsight::BoundChart co2();

std::vector<double> random_walk(std::uint64_t seed, std::size_t n);

// Single-dimension temporal dataset with yearly points starting at 2000.
chartinsight::TimeSeriesDataset yearly(const std::string& name, const std::vector<double>& values);
chartinsight::TimeSeriesDataset yearly(const std::vector<std::pair<std::string, std::vector<double>>>& dims);

}  // namespace fixtures
