#include "voxkit/cli.hpp"

int main(int argc, char** argv) { return voxkit::cli::run(argc, argv); }
