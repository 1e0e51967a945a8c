#include "cyclegen/cli.hpp"

int main(int argc, char** argv) { return cyclegen::cli::run(argc, argv); }
