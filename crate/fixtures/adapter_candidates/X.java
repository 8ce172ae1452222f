public class X implements T1 {
    public void op() { }
}
