#include "qks/cli.hpp"

int main(int argc, char** argv) { return qks::cli::dispatch(argc, argv); }
