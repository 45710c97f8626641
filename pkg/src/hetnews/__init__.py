"""Link prediction on heterogeneous scientific-news graphs with R-GCN, HetGNN and HGT encoders."""

__version__ = "0.1.0"
