#pragma once

#include <filesystem>
#include <iosfwd>

#include "avlab/corpus.hpp"
#include "avlab/encoder.hpp"

namespace avlab {

// Binary layouts are little-endian, IEEE-754 doubles stored bit for bit.
//
// corpus:     "AVLCORP\0" u32 version | config | 4 mixing matrices | contents
// checkpoint: "AVLCKPT\0" u32 version | 6 x u64 dims | u64 seed | u64 n | n x f64
//
// Matrices are written as u64 rows, u64 cols, then rows*cols doubles in the
// in-memory storage order of the matrix.

void write_corpus(std::ostream& out, const Corpus& corpus);
Corpus read_corpus(std::istream& in);
void save_corpus(const std::filesystem::path& path, const Corpus& corpus);
Corpus load_corpus(const std::filesystem::path& path);

void write_params(std::ostream& out, const TowerParams& params);
TowerParams read_params(std::istream& in);
void save_params(const std::filesystem::path& path, const TowerParams& params);
TowerParams load_params(const std::filesystem::path& path);

}  // namespace avlab
