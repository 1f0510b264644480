#include "gridseam/cli.hpp"

int main(int argc, char** argv) { return gridseam::cli::run(argc, argv); }
