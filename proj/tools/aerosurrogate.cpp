#include "aerosurrogate/cli.hpp"

int main(int argc, char** argv) { return aerosurrogate::cli::run(argc, argv); }
