public class F {
    public void tick() { }
    public void tock() { }
}
