#include "htstep/tensor_io.hpp"

#include "htstep/errors.hpp"
#include "htstep/integrators.hpp"

#include <bit>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <istream>
#include <memory>
#include <ostream>
#include <sstream>

namespace htstep {

static_assert(std::endian::native == std::endian::little, "binary tensor formats assume a little-endian host");

namespace {

constexpr char kDenseMagic[] = "HTSTDT01";
constexpr char kHtMagic[] = "HTSTHT01";
constexpr char kCheckpointMagic[] = "HTSTCK01";
constexpr char kTrajectoryMagic[] = "HTSTRJ01";

template <typename T>
void put(std::ostream& os, T v) {
    os.write(reinterpret_cast<const char*>(&v), sizeof v);
}

template <typename T>
T get(std::istream& is) {
    T v{};
    if (!is.read(reinterpret_cast<char*>(&v), sizeof v)) throw InputError("truncated tensor file");
    return v;
}

void put_magic(std::ostream& os, const char* magic) { os.write(magic, 8); }

void expect_magic(std::istream& is, const char* magic) {
    char buf[8];
    if (!is.read(buf, 8) || std::memcmp(buf, magic, 8) != 0)
        throw InputError(std::string("bad file header, expected ") + std::string(magic, 8));
}

void put_doubles(std::ostream& os, const double* p, std::size_t n) {
    os.write(reinterpret_cast<const char*>(p), static_cast<std::streamsize>(n * sizeof(double)));
}

void get_doubles(std::istream& is, double* p, std::size_t n) {
    if (!is.read(reinterpret_cast<char*>(p), static_cast<std::streamsize>(n * sizeof(double))))
        throw InputError("truncated tensor data");
}

Dims read_dims(std::istream& is) {
    const auto d = get<std::uint32_t>(is);
    if (d == 0 || d > 64) throw InputError("implausible tensor order in file");
    Dims dims;
    for (std::uint32_t k = 0; k < d; ++k) dims.push_back(static_cast<Index>(get<std::uint64_t>(is)));
    return dims;
}

void write_dims(std::ostream& os, const Dims& dims) {
    put<std::uint32_t>(os, static_cast<std::uint32_t>(dims.size()));
    for (Index n : dims) put<std::uint64_t>(os, static_cast<std::uint64_t>(n));
}

std::ofstream open_out(const std::string& path, std::ios::openmode extra = {}) {
    std::ofstream os(path, std::ios::binary | extra);
    if (!os) throw InputError("cannot open '" + path + "' for writing");
    return os;
}

std::ifstream open_in(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw InputError("cannot open '" + path + "'");
    return is;
}

}  // namespace

void write_dense(std::ostream& os, const DenseTensor& t) {
    put_magic(os, kDenseMagic);
    write_dims(os, t.dims());
    put_doubles(os, t.data().data(), static_cast<std::size_t>(t.size()));
}

DenseTensor read_dense(std::istream& is) {
    expect_magic(is, kDenseMagic);
    Dims dims = read_dims(is);
    Eigen::VectorXd data(checked_element_count(dims));
    get_doubles(is, data.data(), static_cast<std::size_t>(data.size()));
    return DenseTensor(std::move(dims), std::move(data));
}

void write_dense_text(std::ostream& os, const DenseTensor& t) {
    os << "# htstep dense tensor, column-major\n" << t.order() << '\n';
    for (std::size_t k = 0; k < t.dims().size(); ++k) os << (k ? " " : "") << t.dims()[k];
    os << '\n';
    for (Index i = 0; i < t.size(); ++i) os << format_double(t.data()[i]) << '\n';
}

DenseTensor read_dense_text(std::istream& is) {
    std::string line;
    while (is.peek() == '#') std::getline(is, line);
    int d = 0;
    if (!(is >> d) || d < 1) throw InputError("bad tensor order in text file");
    Dims dims(static_cast<std::size_t>(d));
    for (auto& n : dims)
        if (!(is >> n)) throw InputError("bad dims in text file");
    Eigen::VectorXd data(checked_element_count(dims));
    for (Index i = 0; i < data.size(); ++i) {
        std::string tok;
        if (!(is >> tok)) throw InputError("truncated text tensor");
        data[i] = std::strtod(tok.c_str(), nullptr);
    }
    return DenseTensor(std::move(dims), std::move(data));
}

void write_ht(std::ostream& os, const HTensor& h) {
    put_magic(os, kHtMagic);
    write_dims(os, h.dims());
    const auto& tree = h.tree();
    put<std::uint32_t>(os, static_cast<std::uint32_t>(tree.node_count()));
    for (const auto& node : tree.nodes()) {
        put<std::int32_t>(os, node.left);
        put<std::int32_t>(os, node.right);
        put<std::uint32_t>(os, static_cast<std::uint32_t>(node.modes.size()));
        for (int k : node.modes.modes()) put<std::uint32_t>(os, static_cast<std::uint32_t>(k));
    }
    for (const auto& f : h.factors()) {
        put<std::uint64_t>(os, static_cast<std::uint64_t>(f.rows()));
        put<std::uint64_t>(os, static_cast<std::uint64_t>(f.cols()));
        put_doubles(os, f.data(), static_cast<std::size_t>(f.size()));
    }
}

HTensor read_ht(std::istream& is) {
    expect_magic(is, kHtMagic);
    Dims dims = read_dims(is);
    const int d = static_cast<int>(dims.size());
    const auto nodes = get<std::uint32_t>(is);
    if (nodes != static_cast<std::uint32_t>(2 * d - 1)) throw InputError("HT file has wrong node count");
    std::vector<std::pair<int, int>> children;
    std::vector<ModeSet> modes;
    for (std::uint32_t t = 0; t < nodes; ++t) {
        const int l = get<std::int32_t>(is);
        const int r = get<std::int32_t>(is);
        const auto count = get<std::uint32_t>(is);
        if (count == 0 || count > static_cast<std::uint32_t>(d)) throw InputError("HT file has a bad mode list");
        std::vector<int> m;
        for (std::uint32_t i = 0; i < count; ++i) m.push_back(static_cast<int>(get<std::uint32_t>(is)));
        children.emplace_back(l, r);
        modes.emplace_back(std::move(m));
    }
    // Recognize the stored layout among the known tree shapes.
    TreePtr tree;
    for (const char* name : {"balanced", "linear"}) {
        auto candidate = make_tree(name, d);
        bool same = true;
        for (std::uint32_t t = 0; t < nodes && same; ++t) {
            const auto& node = candidate->node(static_cast<int>(t));
            same = node.left == children[t].first && node.right == children[t].second && node.modes == modes[t];
        }
        if (same) {
            tree = candidate;
            break;
        }
    }
    if (!tree) throw InputError("HT file uses an unsupported dimension tree");
    std::vector<Eigen::MatrixXd> factors;
    for (std::uint32_t t = 0; t < nodes; ++t) {
        const auto rows = static_cast<Index>(get<std::uint64_t>(is));
        const auto cols = static_cast<Index>(get<std::uint64_t>(is));
        checked_element_count({rows, cols});
        Eigen::MatrixXd f(rows, cols);
        get_doubles(is, f.data(), static_cast<std::size_t>(f.size()));
        factors.push_back(std::move(f));
    }
    return HTensor(std::move(tree), std::move(dims), std::move(factors));
}

void save_ht(const std::string& path, const HTensor& h) {
    auto os = open_out(path);
    write_ht(os, h);
}

HTensor load_ht(const std::string& path) {
    auto is = open_in(path);
    return read_ht(is);
}

void save_dense(const std::string& path, const DenseTensor& t) {
    auto os = open_out(path);
    write_dense(os, t);
}

DenseTensor load_dense(const std::string& path) {
    auto is = open_in(path);
    return read_dense(is);
}

void save_checkpoint(const std::string& path, const Checkpoint& c) {
    const std::string tmp = path + ".tmp";
    {
        auto os = open_out(tmp);
        put_magic(os, kCheckpointMagic);
        put<std::int64_t>(os, c.step);
        put<std::uint32_t>(os, static_cast<std::uint32_t>(c.states.size()));
        for (const auto& h : c.states) write_ht(os, h);
        if (!os) throw InputError("failed writing checkpoint '" + path + "'");
    }
    if (std::rename(tmp.c_str(), path.c_str()) != 0) throw InputError("cannot move checkpoint into place");
}

Checkpoint load_checkpoint(const std::string& path) {
    auto is = open_in(path);
    expect_magic(is, kCheckpointMagic);
    Checkpoint c;
    c.step = get<std::int64_t>(is);
    const auto count = get<std::uint32_t>(is);
    for (std::uint32_t i = 0; i < count; ++i) c.states.push_back(read_ht(is));
    return c;
}

TrajectoryWriter::TrajectoryWriter(const std::string& path) : path_(path) {
    auto os = open_out(path_, std::ios::trunc);
    put_magic(os, kTrajectoryMagic);
}

void TrajectoryWriter::append(double t, const DenseTensor& f) {
    auto os = open_out(path_, std::ios::app);
    put<double>(os, t);
    write_dense(os, f);
}

std::vector<TrajectoryFrame> read_trajectory(const std::string& path) {
    auto is = open_in(path);
    expect_magic(is, kTrajectoryMagic);
    std::vector<TrajectoryFrame> frames;
    while (is.peek() != std::char_traits<char>::eof()) {
        TrajectoryFrame fr;
        fr.t = get<double>(is);
        fr.f = read_dense(is);
        frames.push_back(std::move(fr));
    }
    return frames;
}

std::size_t serialized_size(const HTensor& h) {
    std::ostringstream os(std::ios::binary);
    write_ht(os, h);
    return os.str().size();
}

std::size_t serialized_size(const DenseTensor& t) {
    std::ostringstream os(std::ios::binary);
    write_dense(os, t);
    return os.str().size();
}

}  // namespace htstep
