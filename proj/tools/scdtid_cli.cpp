#include "scdtid/cli.hpp"

int main(int argc, char** argv) { return scdtid::cli::run(argc, argv); }
