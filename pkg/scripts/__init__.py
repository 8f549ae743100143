# Script batch del solutore
