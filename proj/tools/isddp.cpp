#include "isddp/cli.hpp"

int main(int argc, char** argv) { return isddp::cli::run(argc, argv); }
