public class Ad implements T {
    private E engine = new E();

    public void request() {
        engine.specific();
    }
}
