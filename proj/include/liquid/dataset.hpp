#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

namespace liquid {

struct ModelSpec;

/// Weighted binary-outcome records. Characteristic columns are stored
/// column-major; outcome 1 = good, 0 = bad.
struct Dataset {
  std::vector<std::string> columns;
  std::vector<std::vector<double>> values;
  std::vector<int> outcome;
  std::vector<double> weight;

  std::size_t rows() const noexcept { return outcome.size(); }
  /// Throws SchemaViolation naming the column when absent.
  std::size_t column_index(std::string_view name) const;
  Dataset subset(const std::vector<std::size_t>& rows) const;
};

/// CSV with a header row: `outcome` (0/1), optional `weight`, then numeric
/// characteristic columns. Numeric fields accept inf/-inf.
Dataset parse_csv(std::string_view text);
Dataset read_csv(const std::filesystem::path& path);
void write_csv(const Dataset& data, std::ostream& out);

struct DataSplit {
  Dataset dev;
  Dataset val;
};

/// Seeded Bernoulli(val_fraction) assignment of each row to validation.
/// The generator is mt19937_64 with a fixed 53-bit uniform mapping, so the
/// split is identical across platforms.
DataSplit split_dataset(const Dataset& data, double val_fraction, std::uint64_t seed);

/// Column index in `data` for each characteristic of `spec`, in spec order.
std::vector<std::size_t> bind_columns(const ModelSpec& spec, const Dataset& data);

/// Shortest round-trip decimal form of a double.
std::string format_double(double v);

}  // namespace liquid
