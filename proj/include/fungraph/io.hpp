#pragma once

#include "fungraph/basis.hpp"
#include "fungraph/dataspace.hpp"
#include "fungraph/sampler.hpp"
#include "fungraph/simgen.hpp"

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

namespace fungraph {

// Shortest round-trip decimal form, locale independent.
std::string format_double(double value);

// Long format, header `subject,variable,t,value`, all indices 1-based.
FunctionalDataset read_long_csv(std::istream& in);
void write_long_csv(std::ostream& out, const FunctionalDataset& data);

// "FGD1", n, p, T as little-endian uint64, then row-major (i, j, t) doubles.
FunctionalDataset read_binary(std::istream& in);
void write_binary(std::ostream& out, const FunctionalDataset& data);

// Picks the binary reader when the file starts with the FGD1 magic.
FunctionalDataset read_dataset(const std::string& path);

// Headerless numeric CSV, one matrix row per line.
Matrix read_matrix_csv(std::istream& in);

void write_edges_csv(std::ostream& out, const CrossCovFunction& summary, const EdgeFunction& edges);
void write_lagprofile_csv(std::ostream& out, Index t, const std::vector<Index>& tprimes, Index j, Index l,
                          const Vector& profile);
void write_truth_csv(std::ostream& out, const TruthGraph& truth);
void write_chain_csv(std::ostream& out, const ChainDraws& chain, Index p);
void write_acceptance(std::ostream& out, const PosteriorDraws& draws);
void write_roc_csv(std::ostream& out, const RocCurve& roc);

// An edge table read back from edges.csv (or a `t,j,l,score` file).
struct EdgeTable {
  Index p = 0;
  Index T = 0;
  Eigen::Matrix<bool, Eigen::Dynamic, Eigen::Dynamic> selected;  // T x npairs
  Matrix score;                                                  // T x npairs
  bool has_selection = false;
};

// Dimensions default to the largest indices seen when p or T is 0.
EdgeTable read_edge_table(std::istream& in, Index p = 0, Index T = 0);
TruthGraph read_truth_csv(std::istream& in, Index p, Index T);

// 64-bit FNV-1a of a file's bytes.
std::uint64_t file_checksum(const std::string& path);

}  // namespace fungraph
