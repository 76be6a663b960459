#include "imbl/cli.hpp"

int main(int argc, char** argv) { return imbl::cli::dispatch(argc, argv); }
