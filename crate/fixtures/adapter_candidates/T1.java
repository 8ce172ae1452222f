public interface T1 {
    void op();
}
