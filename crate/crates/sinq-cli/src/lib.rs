// placeholder during core build
