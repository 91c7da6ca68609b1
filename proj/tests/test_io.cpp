#include "htstep/errors.hpp"
#include "htstep/fokker_planck.hpp"
#include "htstep/tensor_io.hpp"
#include "oracles.hpp"

#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

using namespace htstep;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
    const fs::path dir = fs::temp_directory_path() / "htstep_io_test";
    fs::create_directories(dir);
    return dir / name;
}

void expect_identical(const HTensor& a, const HTensor& b) {
    ASSERT_EQ(a.dims(), b.dims());
    EXPECT_TRUE(a.tree() == b.tree());
    ASSERT_EQ(a.factors().size(), b.factors().size());
    for (std::size_t t = 0; t < a.factors().size(); ++t) EXPECT_EQ(a.factors()[t], b.factors()[t]) << "node " << t;
}

HTensor sample_ht(const std::string& tree, int d) {
    std::mt19937_64 rng(61);
    const Dims dims = d == 4 ? Dims{3, 4, 2, 5} : Dims{5, 6};
    Index total = 1;
    for (Index n : dims) total *= n;
    const DenseTensor t(dims, oracle::random_vector(rng, total));
    return ht_from_dense(t, make_tree(tree, d), TruncationControl::fixed_rank(3)).tensor;
}

}  // namespace

TEST(TensorIO, HTRoundTripIsBitExact) {
    for (const char* tree : {"balanced", "linear"}) {
        const HTensor h = sample_ht(tree, 4);
        std::stringstream ss;
        write_ht(ss, h);
        EXPECT_EQ(ss.str().size(), serialized_size(h));
        expect_identical(read_ht(ss), h);
    }
    const HTensor h2 = sample_ht("balanced", 2);
    const fs::path p = scratch("h2.ht");
    save_ht(p.string(), h2);
    expect_identical(load_ht(p.string()), h2);
    EXPECT_EQ(fs::file_size(p), serialized_size(h2));
}

TEST(TensorIO, DenseBinaryAndTextRoundTrips) {
    std::mt19937_64 rng(62);
    const DenseTensor t({3, 2, 4}, oracle::random_vector(rng, 24));
    std::stringstream bin;
    write_dense(bin, t);
    EXPECT_EQ(bin.str().size(), serialized_size(t));
    const DenseTensor back = read_dense(bin);
    EXPECT_EQ(back.dims(), t.dims());
    EXPECT_EQ(back.data(), t.data());

    std::stringstream txt;
    write_dense_text(txt, t);
    const DenseTensor back_txt = read_dense_text(txt);
    EXPECT_EQ(back_txt.dims(), t.dims());
    EXPECT_EQ(back_txt.data(), t.data());

    const fs::path p = scratch("t.bin");
    save_dense(p.string(), t);
    EXPECT_EQ(load_dense(p.string()).data(), t.data());
}

TEST(TensorIO, CheckpointKeepsStepAndHistory) {
    const Checkpoint c{17, {sample_ht("balanced", 4), sample_ht("linear", 4).scaled(2.0)}};
    const fs::path p = scratch("ck.bin");
    save_checkpoint(p.string(), c);
    const Checkpoint back = load_checkpoint(p.string());
    EXPECT_EQ(back.step, 17);
    ASSERT_EQ(back.states.size(), 2u);
    expect_identical(back.states[0], c.states[0]);
    expect_identical(back.states[1], c.states[1]);
}

TEST(TensorIO, TrajectoryAppendsFrames) {
    const fs::path p = scratch("traj.bin");
    fs::remove(p);
    TrajectoryWriter w(p.string());
    std::mt19937_64 rng(63);
    std::vector<DenseTensor> frames;
    for (int k = 0; k < 3; ++k) {
        frames.emplace_back(Dims{4, 4}, oracle::random_vector(rng, 16));
        w.append(0.1 * k, frames.back());
    }
    const auto back = read_trajectory(p.string());
    ASSERT_EQ(back.size(), 3u);
    for (int k = 0; k < 3; ++k) {
        EXPECT_DOUBLE_EQ(back[k].t, 0.1 * k);
        EXPECT_EQ(back[k].f.data(), frames[k].data());
    }
}

TEST(TensorIO, CorruptInputIsRejected) {
    std::stringstream bad("NOTMAGIC and some bytes");
    EXPECT_THROW(read_ht(bad), InputError);
    std::stringstream bad2("NOTMAGIC");
    EXPECT_THROW(read_dense(bad2), InputError);

    std::stringstream ss;
    write_ht(ss, sample_ht("balanced", 4));
    const std::string full = ss.str();
    std::stringstream cut(full.substr(0, full.size() / 2));
    EXPECT_THROW(read_ht(cut), InputError);

    std::stringstream dense_ss;
    write_dense(dense_ss, DenseTensor({2, 2}));
    std::stringstream cut2(dense_ss.str().substr(0, 20));
    EXPECT_THROW(read_dense(cut2), InputError);

    EXPECT_THROW(load_ht(scratch("missing.ht").string() + ".nope"), InputError);
}

TEST(TensorIO, HTIsMuchSmallerThanDenseForLowRankData) {
    const HTensor h = ic_4d(12, 2);
    EXPECT_GT(static_cast<double>(serialized_size(ht_to_dense(h))) / static_cast<double>(serialized_size(h)), 10.0);
}
