#include "support/fixtures.hpp"

#include <fstream>
#include <random>
#include <sstream>
#include <stdexcept>

namespace fixtures {

namespace ci = chartinsight;

std::filesystem::path data_dir() { return CHARTINSIGHT_DATA_DIR; }

std::string read_file(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open " + p.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

ci::BoundChart stocks() {
    auto dir = data_dir() / "fixtures";
    return ci::load_chart(read_file(dir / "stocks.spec.json"), read_file(dir / "stocks.csv"));
}

ci::BoundChart co2() {
    auto dir = data_dir() / "fixtures";
    return ci::load_chart(read_file(dir / "co2.spec.json"), read_file(dir / "co2.csv"));
}

std::vector<double> random_walk(std::uint64_t seed, std::size_t n) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> step(0.0, 1.0);
    std::vector<double> out(n);
    double x = 0;
    for (auto& v : out) {
        x += step(rng);
        v = x;
    }
    return out;
}

ci::TimeSeriesDataset yearly(const std::vector<std::pair<std::string, std::vector<double>>>& dims) {
    ci::TimeSeriesDataset ds;
    ds.x_type = ci::XType::Temporal;
    ds.time_field = "year";
    const std::size_t n = dims.front().second.size();
    for (std::size_t i = 0; i < n; ++i) {
        auto d = std::chrono::year_month_day{std::chrono::year{2000 + int(i)}, std::chrono::January, std::chrono::day{1}};
        ds.timestamps.push_back({ci::epoch_days(d), ci::iso_date(d)});
    }
    for (const auto& [name, values] : dims) {
        ci::Series s(values.begin(), values.end());
        ds.dimensions.emplace(name, std::move(s));
    }
    return ds;
}

ci::TimeSeriesDataset yearly(const std::string& name, const std::vector<double>& values) {
    return yearly({{name, values}});
}

}  // namespace fixtures
