#pragma once

#include "htstep/dense_tensor.hpp"
#include "htstep/htensor.hpp"

#include <iosfwd>
#include <string>
#include <vector>

namespace htstep {

// Binary layouts are little-endian.
//
// Dense tensor:  "HTSTDT01", u32 d, u64 dims[d], f64 data[prod dims] (column-major).
// HT container:  "HTSTHT01", u32 d, u64 dims[d], u32 node_count,
//                per node: i32 left, i32 right, u32 mode_count, u32 modes[...],
//                per node: u64 rows, u64 cols, f64 factor (column-major).
// Checkpoint:    "HTSTCK01", i64 step, u32 count, count HT containers (newest first).
// Trajectory:    "HTSTRJ01", then repeated (f64 time, dense tensor).
//
// Dense text:    '#' comment line, d, dims, then one value per line in shortest
//                round-trip form, column-major.

void write_dense(std::ostream& os, const DenseTensor& t);
DenseTensor read_dense(std::istream& is);

void write_dense_text(std::ostream& os, const DenseTensor& t);
DenseTensor read_dense_text(std::istream& is);

void write_ht(std::ostream& os, const HTensor& h);
HTensor read_ht(std::istream& is);

void save_ht(const std::string& path, const HTensor& h);
HTensor load_ht(const std::string& path);
void save_dense(const std::string& path, const DenseTensor& t);
DenseTensor load_dense(const std::string& path);

struct Checkpoint {
    long step = 0;
    std::vector<HTensor> states;
};
void save_checkpoint(const std::string& path, const Checkpoint& c);
Checkpoint load_checkpoint(const std::string& path);

class TrajectoryWriter {
public:
    explicit TrajectoryWriter(const std::string& path);
    void append(double t, const DenseTensor& f);

private:
    std::string path_;
};

struct TrajectoryFrame {
    double t = 0.0;
    DenseTensor f;
};
std::vector<TrajectoryFrame> read_trajectory(const std::string& path);

/// Size in bytes of write_ht / write_dense output.
std::size_t serialized_size(const HTensor& h);
std::size_t serialized_size(const DenseTensor& t);

}  // namespace htstep
